#include "ltr3o/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ltr3o/common.hpp"

namespace ltr3o {

std::string BackboneSpec::to_string() const {
  return name + ":" + std::to_string(feature_dim);
}

BackboneSpec parse_backbone_spec(const std::string& text) {
  BackboneSpec spec;
  auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (spec.name == "tiny") {
    spec.feature_dim = 128;
  } else if (spec.name == "resnet18") {
    spec.feature_dim = 512;
  } else if (!spec.name.empty()) {
    throw ValidationError("unknown backbone '" + spec.name + "' (expected tiny or resnet18)");
  } else {
    throw ValidationError("empty backbone spec");
  }
  if (colon != std::string::npos) {
    const std::string dim = text.substr(colon + 1);
    try {
      std::size_t used = 0;
      spec.feature_dim = std::stoi(dim, &used);
      if (used != dim.size()) throw std::invalid_argument(dim);
    } catch (const std::exception&) {
      throw ValidationError("bad backbone feature dim '" + dim + "'");
    }
    if (spec.feature_dim <= 0) throw ValidationError("backbone feature dim must be positive");
  }
  return spec;
}

int high_group_size(double gamma, int k) {
  return static_cast<int>(std::ceil(gamma * static_cast<double>(k) - 1e-9));
}

void Config::validate() const {
  if (k < 2) throw ValidationError("config: k must be >= 2");
  if (!(gamma > 0.0)) throw ValidationError("config: gamma must be > 0");
  const int kh = high_group_size(gamma, k);
  if (kh < 1 || kh > k - 1) {
    throw ValidationError("config: gamma=" + std::to_string(gamma) + " with k=" + std::to_string(k) +
                          " leaves a rank group empty (Ceil(gamma*k) must be in [1, k-1])");
  }
  if (!(delta > 0.0 && delta <= 1.0)) throw ValidationError("config: delta must be in (0, 1]");
  if (lambda_ < 0.0) throw ValidationError("config: lambda must be >= 0");
  if (image_size < 16) throw ValidationError("config: image_size must be >= 16");
  if (image_size % 16 != 0) throw ValidationError("config: image_size must be divisible by 16");
  if (batch_size < 1) throw ValidationError("config: batch_size must be >= 1");
  if (!(initial_lr > 0.0)) throw ValidationError("config: initial_lr must be > 0");
  if (epochs < 1) throw ValidationError("config: epochs must be >= 1");
  if (!(flow_scale > 0.0)) throw ValidationError("config: flow_scale must be > 0");
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& value, const std::string& key, int line, const std::string& origin) {
  std::istringstream iss(value);
  T out{};
  iss >> out;
  if (iss.fail() || !(iss >> std::ws).eof()) {
    throw ValidationError(origin + ":" + std::to_string(line) + ": bad value '" + value +
                          "' for key '" + key + "'");
  }
  return out;
}

}  // namespace

Config parse_config_text(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(line_no) + ": expected key=value, got '" +
                            trim(raw) + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "k") {
      cfg.k = parse_number<int>(value, key, line_no, origin);
    } else if (key == "delta") {
      cfg.delta = parse_number<double>(value, key, line_no, origin);
    } else if (key == "gamma") {
      cfg.gamma = parse_number<double>(value, key, line_no, origin);
    } else if (key == "lambda") {
      cfg.lambda_ = parse_number<double>(value, key, line_no, origin);
    } else if (key == "image_size") {
      cfg.image_size = parse_number<int>(value, key, line_no, origin);
    } else if (key == "batch_size") {
      cfg.batch_size = parse_number<int>(value, key, line_no, origin);
    } else if (key == "initial_lr") {
      cfg.initial_lr = parse_number<double>(value, key, line_no, origin);
    } else if (key == "epochs") {
      cfg.epochs = parse_number<int>(value, key, line_no, origin);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(value, key, line_no, origin);
    } else if (key == "backbone") {
      cfg.backbone = parse_backbone_spec(value);
    } else if (key == "flow_scale") {
      cfg.flow_scale = parse_number<double>(value, key, line_no, origin);
    } else {
      throw ValidationError(origin + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

Config load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

std::string config_to_text(const Config& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "k=" << cfg.k << "\n"
      << "delta=" << cfg.delta << "\n"
      << "gamma=" << cfg.gamma << "\n"
      << "lambda=" << cfg.lambda_ << "\n"
      << "image_size=" << cfg.image_size << "\n"
      << "batch_size=" << cfg.batch_size << "\n"
      << "initial_lr=" << cfg.initial_lr << "\n"
      << "epochs=" << cfg.epochs << "\n"
      << "seed=" << cfg.seed << "\n"
      << "backbone=" << cfg.backbone.to_string() << "\n"
      << "flow_scale=" << cfg.flow_scale << "\n";
  return out.str();
}

LabelSpace::LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw ValidationError("label space must contain at least one class");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      if (names_[i] == names_[j]) throw ValidationError("duplicate class name '" + names_[i] + "'");
    }
  }
}

const std::string& LabelSpace::name(int idx) const {
  if (idx < 0 || idx >= size()) throw ValidationError("class index out of range");
  return names_[static_cast<std::size_t>(idx)];
}

int LabelSpace::index_of(const std::string& label) const {
  auto it = std::find(names_.begin(), names_.end(), label);
  if (it == names_.end()) throw ValidationError("label '" + label + "' not in label space");
  return static_cast<int>(it - names_.begin());
}

bool LabelSpace::contains(const std::string& label) const {
  return std::find(names_.begin(), names_.end(), label) != names_.end();
}

std::vector<double> LabelSpace::one_hot(int label) const {
  if (label < 0 || label >= size()) throw ValidationError("class index out of range");
  std::vector<double> y(static_cast<std::size_t>(size()), 0.0);
  y[static_cast<std::size_t>(label)] = 1.0;
  return y;
}

std::string LabelSpace::to_string() const {
  std::string out = "{";
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (i) out += ", ";
    out += names_[i];
  }
  out += "}";
  return out;
}

}  // namespace ltr3o
