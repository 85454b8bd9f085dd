#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ltr3o {

// Backbone selector: a named architecture plus the feature dimension D it
// emits. When D differs from the trunk's natural width a linear projection
// is appended. Text form "name" or "name:D".
struct BackboneSpec {
  std::string name = "tiny";
  int feature_dim = 128;

  std::string to_string() const;
};

BackboneSpec parse_backbone_spec(const std::string& text);

struct Config {
  int k = 8;                 // 3O candidates per clip
  double delta = 0.7;        // ranking margin
  double gamma = 0.1;        // high-candidate ratio
  double lambda_ = 1.0;      // ranking-loss weight in the total objective
  int image_size = 112;
  int batch_size = 64;
  double initial_lr = 1e-4;
  int epochs = 30;
  std::uint64_t seed = 0;
  BackboneSpec backbone;
  double flow_scale = 8.0;   // displacement normalization, pixels

  // Throws ValidationError on the first violated invariant.
  void validate() const;
};

// Number of candidates in the high-scoring rank group: Ceil(gamma * k), with
// a small guard so exact products (0.25 * 8) do not round up spuriously.
int high_group_size(double gamma, int k);

// Flat key=value config file. One key per line, '#' comments, unknown keys
// are errors. Keys: k, delta, gamma, lambda, image_size, batch_size,
// initial_lr, epochs, seed, backbone, flow_scale. Missing keys keep defaults.
Config load_config_file(const std::filesystem::path& path);
Config parse_config_text(const std::string& text, const std::string& origin = "<config>");
std::string config_to_text(const Config& cfg);

// Ordered class-name list defining the label index space.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int idx) const;
  // Throws ValidationError when the label is not in the space.
  int index_of(const std::string& label) const;
  bool contains(const std::string& label) const;
  std::vector<double> one_hot(int label) const;
  std::string to_string() const;  // "{a, b, c}"

  bool operator==(const LabelSpace&) const = default;

 private:
  std::vector<std::string> names_;
};

}  // namespace ltr3o
