#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ltr3o/config.hpp"
#include "ltr3o/image.hpp"
#include "ltr3o/nn.hpp"

namespace ltr3o {

// Backbone f1 (shared across the K candidates), scalar ruler f2 with the
// normalized-sigmoid scores, convex feature fusion, and classifier f3.
class Ltr3oModel {
 public:
  Ltr3oModel(const BackboneSpec& spec, int n_classes, int image_size);

  void init_params(std::uint64_t seed);

  int feature_dim() const { return feature_dim_; }
  int n_classes() const { return n_classes_; }
  int image_size() const { return image_size_; }
  const BackboneSpec& backbone_spec() const { return spec_; }

  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }
  const std::vector<nn::ParamInfo>& registry() const { return pb_.infos(); }

  struct ForwardResult {
    std::vector<double> probs;         // C
    std::vector<double> class_logits;  // C
    std::vector<double> alpha;         // K
    std::vector<double> sigma;         // K, sigmoid of ruler logits
    std::vector<double> ruler_logits;  // K
    std::vector<double> fused;         // D
    std::vector<double> features;      // K x D, row per candidate
    nn::GraphNet::Tape tape;           // backbone intermediates
  };

  // inputs: the K candidate renderings of one sample (c == 3, square,
  // image_size). K >= 2; K == 1 is allowed for single-candidate baselines,
  // where alpha is fixed to {1}.
  ForwardResult forward(const std::vector<Image>& inputs) const;

  // Pushes d(loss)/d(class_logits) and an extra d(loss)/d(alpha) term (for
  // the ranking loss; pass empty for none) back to all parameters,
  // accumulating into grad (size params().size()).
  void backward(const ForwardResult& f, const std::vector<double>& dclass_logits,
                const std::vector<double>& dalpha_extra, double* grad) const;

  // Candidate features without the heads (K rows of length D).
  std::vector<double> backbone_features(const std::vector<Image>& inputs) const;

  // Copy parameters with matching name and size from another checkpoint;
  // returns how many tensors were taken. Lets externally trained backbone
  // weights seed a run.
  int load_matching_params(const std::filesystem::path& checkpoint);

 private:
  BackboneSpec spec_;
  int n_classes_;
  int image_size_;
  int feature_dim_ = 0;
  nn::ParamBuilder pb_;
  nn::GraphNet backbone_;
  std::size_t f2_w_ = 0, f2_b_ = 0, f3_w_ = 0, f3_b_ = 0;
  std::vector<double> theta_;

  nn::Blob images_to_blob(const std::vector<Image>& inputs) const;
};

// Normalized sigmoid scores from raw ruler logits. The denominator is summed
// in value order, so permuting the logits permutes the result bitwise.
std::vector<double> ruler_scores_from_logits(const std::vector<double>& logits);

// Checkpoint container: magic + version + JSON header (backbone spec,
// dimensions, config, labels, parameter table) + raw little-endian f64
// parameter payload.
void save_checkpoint(const std::filesystem::path& path, const Ltr3oModel& model,
                     const Config& config, const LabelSpace& labels);

struct Checkpoint {
  Ltr3oModel model;
  Config config;
  LabelSpace labels;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ltr3o
