#include "ltr3o/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "ltr3o/common.hpp"
#include "ltr3o/rng.hpp"

namespace ltr3o {

namespace {

using nn::Blob;

constexpr char kMagic[8] = {'L', 'T', 'R', '3', 'O', 'C', 'P', '\0'};
constexpr std::uint16_t kCkptVersion = 1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void build_tiny(nn::ParamBuilder& pb, nn::GraphNet& g) {
  const int chans[4] = {16, 32, 64, 128};
  int cin = 3;
  int blob = 0;
  for (int b = 0; b < 4; ++b) {
    const std::string base = "f1.block" + std::to_string(b + 1);
    blob = g.add(std::make_unique<nn::Conv2d>(pb, base + ".conv", cin, chans[b], 3, 1, 1), blob);
    blob = g.add(std::make_unique<nn::InstanceNorm>(pb, base + ".norm", chans[b]), blob);
    blob = g.add(std::make_unique<nn::ReLU>(), blob);
    blob = g.add(std::make_unique<nn::AvgPool2>(), blob);
    cin = chans[b];
  }
  g.add(std::make_unique<nn::GlobalAvgPool>(), blob);
}

void build_resnet18(nn::ParamBuilder& pb, nn::GraphNet& g) {
  int blob = 0;
  blob = g.add(std::make_unique<nn::Conv2d>(pb, "f1.stem.conv", 3, 64, 7, 2, 3), blob);
  blob = g.add(std::make_unique<nn::InstanceNorm>(pb, "f1.stem.norm", 64), blob);
  blob = g.add(std::make_unique<nn::ReLU>(), blob);
  blob = g.add(std::make_unique<nn::MaxPool>(3, 2, 1), blob);

  const int chans[4] = {64, 128, 256, 512};
  int cin = 64;
  for (int s = 0; s < 4; ++s) {
    for (int b = 0; b < 2; ++b) {
      const int cout = chans[s];
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      const std::string base = "f1.stage" + std::to_string(s + 1) + ".block" + std::to_string(b + 1);
      int skip = blob;
      int x = g.add(std::make_unique<nn::Conv2d>(pb, base + ".conv1", cin, cout, 3, stride, 1),
                    blob);
      x = g.add(std::make_unique<nn::InstanceNorm>(pb, base + ".norm1", cout), x);
      x = g.add(std::make_unique<nn::ReLU>(), x);
      x = g.add(std::make_unique<nn::Conv2d>(pb, base + ".conv2", cout, cout, 3, 1, 1), x);
      x = g.add(std::make_unique<nn::InstanceNorm>(pb, base + ".norm2", cout), x);
      if (stride != 1 || cin != cout) {
        skip = g.add(std::make_unique<nn::Conv2d>(pb, base + ".down.conv", cin, cout, 1, stride, 0),
                     blob);
        skip = g.add(std::make_unique<nn::InstanceNorm>(pb, base + ".down.norm", cout), skip);
      }
      x = g.add(std::make_unique<nn::Add>(), x, skip);
      x = g.add(std::make_unique<nn::ReLU>(), x);
      blob = x;
      cin = cout;
    }
  }
  g.add(std::make_unique<nn::GlobalAvgPool>(), blob);
}

}  // namespace

std::vector<double> ruler_scores_from_logits(const std::vector<double>& logits) {
  if (logits.size() < 2) throw ValidationError("ruler scores need at least 2 candidates");
  std::vector<double> sig(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) sig[j] = sigmoid(logits[j]);
  std::vector<double> sorted = sig;
  std::sort(sorted.begin(), sorted.end());
  double denom = 0.0;
  for (double v : sorted) denom += v;
  std::vector<double> alpha(sig.size());
  for (std::size_t j = 0; j < sig.size(); ++j) alpha[j] = sig[j] / denom;
  return alpha;
}

Ltr3oModel::Ltr3oModel(const BackboneSpec& spec, int n_classes, int image_size)
    : spec_(spec), n_classes_(n_classes), image_size_(image_size) {
  if (n_classes < 2) throw ValidationError("model needs at least 2 classes");
  if (image_size < 16) throw ValidationError("model image_size too small");

  int native_d = 0;
  if (spec.name == "tiny") {
    build_tiny(pb_, backbone_);
    native_d = 128;
  } else if (spec.name == "resnet18") {
    build_resnet18(pb_, backbone_);
    native_d = 512;
  } else {
    throw ValidationError("unknown backbone: " + spec.name);
  }
  // sanity: the graph must reduce this input to a flat native_d vector
  const nn::Shape out = backbone_.infer_shape({3, image_size, image_size});
  if (out.c != native_d || out.h != 1 || out.w != 1)
    throw RuntimeError("backbone output shape unexpected");

  feature_dim_ = spec.feature_dim > 0 ? spec.feature_dim : native_d;
  if (feature_dim_ != native_d)
    backbone_.add(std::make_unique<nn::Linear>(pb_, "f1.proj", native_d, feature_dim_),
                  backbone_.output_blob());

  f2_w_ = pb_.add("f2.weight", {1, feature_dim_});
  f2_b_ = pb_.add("f2.bias", {1});
  f3_w_ = pb_.add("f3.weight", {n_classes_, feature_dim_});
  f3_b_ = pb_.add("f3.bias", {n_classes_});
  theta_.assign(pb_.total(), 0.0);
}

void Ltr3oModel::init_params(std::uint64_t seed) {
  for (const auto& p : pb_.infos()) {
    RngStream rng = make_rng(seed, "init:" + p.name);
    double* t = theta_.data() + p.offset;
    if (p.name.ends_with(".gain")) {
      for (std::size_t i = 0; i < p.size; ++i) t[i] = 1.0;
    } else if (p.name.ends_with(".bias")) {
      for (std::size_t i = 0; i < p.size; ++i) t[i] = 0.0;
    } else if (p.shape.size() == 4) {
      const double fan_in = static_cast<double>(p.shape[1]) * p.shape[2] * p.shape[3];
      const double std = std::sqrt(2.0 / fan_in);
      for (std::size_t i = 0; i < p.size; ++i) t[i] = rng.normal(0.0, std);
    } else {
      const double fan_in = static_cast<double>(p.shape.back());
      const double std = std::sqrt(1.0 / fan_in);
      for (std::size_t i = 0; i < p.size; ++i) t[i] = rng.normal(0.0, std);
    }
  }
}

nn::Blob Ltr3oModel::images_to_blob(const std::vector<Image>& inputs) const {
  if (inputs.empty()) throw ValidationError("model forward: no inputs");
  Blob in = Blob::zeros(static_cast<int>(inputs.size()), 3, image_size_, image_size_);
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    const Image& im = inputs[j];
    if (im.c != 3 || im.h != image_size_ || im.w != image_size_)
      throw ValidationError("model forward: input " + std::to_string(j) + " must be " +
                            std::to_string(image_size_) + "x" + std::to_string(image_size_) +
                            "x3");
    double* dst = in.at(static_cast<int>(j));
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < im.h; ++y)
        for (int x = 0; x < im.w; ++x)
          dst[(static_cast<std::size_t>(c) * im.h + y) * im.w + x] = im.at(y, x, c);
  }
  return in;
}

Ltr3oModel::ForwardResult Ltr3oModel::forward(const std::vector<Image>& inputs) const {
  ForwardResult r;
  const int K = static_cast<int>(inputs.size());
  const int D = feature_dim_;

  const Blob& feat = backbone_.forward(theta_.data(), images_to_blob(inputs), r.tape);
  r.features.assign(feat.v.begin(), feat.v.end());

  r.ruler_logits.resize(static_cast<std::size_t>(K));
  r.sigma.resize(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    double s = theta_[f2_b_];
    const double* x = feat.at(j);
    for (int d = 0; d < D; ++d) s += theta_[f2_w_ + static_cast<std::size_t>(d)] * x[d];
    r.ruler_logits[static_cast<std::size_t>(j)] = s;
    r.sigma[static_cast<std::size_t>(j)] = sigmoid(s);
  }
  r.alpha = K >= 2 ? ruler_scores_from_logits(r.ruler_logits) : std::vector<double>{1.0};

  r.fused.assign(static_cast<std::size_t>(D), 0.0);
  for (int j = 0; j < K; ++j) {
    const double a = r.alpha[static_cast<std::size_t>(j)];
    const double* x = feat.at(j);
    for (int d = 0; d < D; ++d) r.fused[static_cast<std::size_t>(d)] += a * x[d];
  }

  r.class_logits.assign(static_cast<std::size_t>(n_classes_), 0.0);
  for (int c = 0; c < n_classes_; ++c) {
    double s = theta_[f3_b_ + static_cast<std::size_t>(c)];
    for (int d = 0; d < D; ++d)
      s += theta_[f3_w_ + static_cast<std::size_t>(c) * D + d] * r.fused[static_cast<std::size_t>(d)];
    r.class_logits[static_cast<std::size_t>(c)] = s;
  }

  r.probs.resize(static_cast<std::size_t>(n_classes_));
  const double m = *std::max_element(r.class_logits.begin(), r.class_logits.end());
  double z = 0.0;
  for (int c = 0; c < n_classes_; ++c) {
    r.probs[static_cast<std::size_t>(c)] = std::exp(r.class_logits[static_cast<std::size_t>(c)] - m);
    z += r.probs[static_cast<std::size_t>(c)];
  }
  for (double& p : r.probs) p /= z;
  return r;
}

void Ltr3oModel::backward(const ForwardResult& f, const std::vector<double>& dclass_logits,
                          const std::vector<double>& dalpha_extra, double* grad) const {
  const int K = static_cast<int>(f.alpha.size());
  const int D = feature_dim_;
  if (static_cast<int>(dclass_logits.size()) != n_classes_)
    throw ValidationError("backward: dclass_logits size mismatch");
  if (!dalpha_extra.empty() && static_cast<int>(dalpha_extra.size()) != K)
    throw ValidationError("backward: dalpha size mismatch");

  // classifier
  std::vector<double> dfused(static_cast<std::size_t>(D), 0.0);
  for (int c = 0; c < n_classes_; ++c) {
    const double dc = dclass_logits[static_cast<std::size_t>(c)];
    grad[f3_b_ + static_cast<std::size_t>(c)] += dc;
    for (int d = 0; d < D; ++d) {
      grad[f3_w_ + static_cast<std::size_t>(c) * D + d] += dc * f.fused[static_cast<std::size_t>(d)];
      dfused[static_cast<std::size_t>(d)] +=
          theta_[f3_w_ + static_cast<std::size_t>(c) * D + d] * dc;
    }
  }

  // fusion
  std::vector<double> dalpha(static_cast<std::size_t>(K), 0.0);
  std::vector<double> dfeat(static_cast<std::size_t>(K) * D, 0.0);
  for (int j = 0; j < K; ++j) {
    const double* x = f.features.data() + static_cast<std::size_t>(j) * D;
    double dot = 0.0;
    for (int d = 0; d < D; ++d) {
      dot += x[d] * dfused[static_cast<std::size_t>(d)];
      dfeat[static_cast<std::size_t>(j) * D + d] =
          f.alpha[static_cast<std::size_t>(j)] * dfused[static_cast<std::size_t>(d)];
    }
    dalpha[static_cast<std::size_t>(j)] = dot;
    if (!dalpha_extra.empty()) dalpha[static_cast<std::size_t>(j)] += dalpha_extra[static_cast<std::size_t>(j)];
  }

  // ruler (skipped for the single-candidate baseline where alpha is fixed)
  if (K >= 2) {
    double denom = 0.0;
    {
      std::vector<double> sorted = f.sigma;
      std::sort(sorted.begin(), sorted.end());
      for (double v : sorted) denom += v;
    }
    double cross = 0.0;
    for (int j = 0; j < K; ++j) cross += dalpha[static_cast<std::size_t>(j)] * f.sigma[static_cast<std::size_t>(j)];
    for (int j = 0; j < K; ++j) {
      const double dsig = dalpha[static_cast<std::size_t>(j)] / denom - cross / (denom * denom);
      const double sg = f.sigma[static_cast<std::size_t>(j)];
      const double ds = dsig * sg * (1.0 - sg);
      grad[f2_b_] += ds;
      const double* x = f.features.data() + static_cast<std::size_t>(j) * D;
      for (int d = 0; d < D; ++d) {
        grad[f2_w_ + static_cast<std::size_t>(d)] += ds * x[d];
        dfeat[static_cast<std::size_t>(j) * D + d] += ds * theta_[f2_w_ + static_cast<std::size_t>(d)];
      }
    }
  }

  Blob dfeat_blob = Blob::zeros(K, D, 1, 1);
  dfeat_blob.v = std::move(dfeat);
  backbone_.backward(theta_.data(), f.tape, dfeat_blob, grad);
}

std::vector<double> Ltr3oModel::backbone_features(const std::vector<Image>& inputs) const {
  nn::GraphNet::Tape tape;
  const Blob& feat = backbone_.forward(theta_.data(), images_to_blob(inputs), tape);
  return feat.v;
}

void save_checkpoint(const std::filesystem::path& path, const Ltr3oModel& model,
                     const Config& config, const LabelSpace& labels) {
  nlohmann::json header;
  header["backbone"] = model.backbone_spec().to_string();
  header["feature_dim"] = model.feature_dim();
  header["n_classes"] = model.n_classes();
  header["image_size"] = model.image_size();
  header["config"] = config_to_text(config);
  header["labels"] = labels.names();
  nlohmann::json ptable = nlohmann::json::array();
  for (const auto& p : model.registry())
    ptable.push_back({{"name", p.name}, {"shape", p.shape}, {"offset", p.offset}, {"size", p.size}});
  header["params"] = ptable;
  const std::string htext = header.dump();

  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeError("cannot write checkpoint: " + path.string());
  f.write(kMagic, 8);
  const std::uint16_t ver = kCkptVersion;
  f.write(reinterpret_cast<const char*>(&ver), 2);
  const std::uint64_t hlen = htext.size();
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  f.write(reinterpret_cast<const char*>(model.params().data()),
          static_cast<std::streamsize>(model.params().size() * sizeof(double)));
  if (!f) throw RuntimeError("short write: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open checkpoint: " + path.string());
  char magic[8];
  if (!f.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw ValidationError("not a model checkpoint: " + path.string());
  std::uint16_t ver = 0;
  f.read(reinterpret_cast<char*>(&ver), 2);
  if (ver != kCkptVersion)
    throw ValidationError("checkpoint version " + std::to_string(ver) + " unsupported");
  std::uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 8);
  if (!f || hlen == 0 || hlen > (1u << 24))
    throw ValidationError("corrupt checkpoint header: " + path.string());
  std::string htext(hlen, '\0');
  if (!f.read(htext.data(), static_cast<std::streamsize>(hlen)))
    throw ValidationError("truncated checkpoint: " + path.string());

  nlohmann::json header = nlohmann::json::parse(htext, nullptr, false);
  if (header.is_discarded()) throw ValidationError("corrupt checkpoint header: " + path.string());

  Config config = parse_config_text(header.at("config").get<std::string>(), path.string());
  LabelSpace labels(header.at("labels").get<std::vector<std::string>>());
  const BackboneSpec spec = parse_backbone_spec(header.at("backbone").get<std::string>());

  Checkpoint ck{Ltr3oModel(spec, header.at("n_classes").get<int>(),
                           header.at("image_size").get<int>()),
                config, labels};
  if (ck.model.feature_dim() != header.at("feature_dim").get<int>())
    throw ValidationError("checkpoint feature_dim mismatch: " + path.string());

  auto& theta = ck.model.params();
  if (!f.read(reinterpret_cast<char*>(theta.data()),
              static_cast<std::streamsize>(theta.size() * sizeof(double))))
    throw ValidationError("truncated checkpoint payload: " + path.string());
  return ck;
}

int Ltr3oModel::load_matching_params(const std::filesystem::path& checkpoint) {
  Checkpoint other = load_checkpoint(checkpoint);
  int taken = 0;
  for (const auto& p : pb_.infos()) {
    for (const auto& q : other.model.registry()) {
      if (q.name == p.name && q.size == p.size) {
        std::copy_n(other.model.params().data() + q.offset, p.size, theta_.data() + p.offset);
        ++taken;
        break;
      }
    }
  }
  return taken;
}

}  // namespace ltr3o
