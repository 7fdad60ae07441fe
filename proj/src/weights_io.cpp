#include "iol/weights_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "iol/error.hpp"
#include "iol/ini.hpp"

namespace iol {

namespace {

constexpr ErrorCategory kCorrupt = ErrorCategory::corrupt_file;

std::string join(const double* v, std::size_t n) {
  std::string out;
  char buf[40];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    if (i) out += ' ';
    out += buf;
  }
  return out;
}

std::vector<double> numbers(const std::string& source, const std::string& key, const std::string& value,
                            std::size_t expected) {
  std::vector<double> out;
  std::istringstream ss(value);
  std::string tok;
  while (ss >> tok) {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      fail(kCorrupt, source + ": '" + key + "' holds a malformed number '" + tok + "'");
    }
    out.push_back(x);
  }
  if (out.size() != expected) {
    fail(kCorrupt, source + ": '" + key + "' has " + std::to_string(out.size()) + " values, expected " +
                       std::to_string(expected));
  }
  return out;
}

struct LayerKeys {
  const char* weights;
  const char* bias;
};
constexpr LayerKeys kLayerKeys[3] = {{"layer1_weights", "layer1_bias"},
                                     {"layer2_weights", "layer2_bias"},
                                     {"layer3_weights", "layer3_bias"}};

}  // namespace

std::string weights_text(const SavedNetwork& net) {
  validate(net.params);
  const NetParams& p = net.params;
  std::string body = "# iolnet weights\n";
  body += "format_version = " + std::to_string(kWeightsFormatVersion) + "\n";
  body += "layer_dims = 6 6 6 1\n";
  body += "seed = " + std::to_string(p.seed) + "\n";
  body += "input_shift = " + join(p.norm.shift.data(), kInputs) + "\n";
  body += "input_scale = " + join(p.norm.scale.data(), kInputs) + "\n";
  for (std::size_t l = 0; l < kLayers.size(); ++l) {
    const LayerOffsets& o = kLayers[l];
    body += std::string(kLayerKeys[l].weights) + " = " + join(p.values.data() + o.weights, o.rows * o.cols) + "\n";
    body += std::string(kLayerKeys[l].bias) + " = " + join(p.values.data() + o.bias, o.rows) + "\n";
  }
  if (net.adam) {
    body += "adam_step = " + std::to_string(net.adam->step) + "\n";
    body += "adam_m = " + join(net.adam->m.data(), kParamCount) + "\n";
    body += "adam_v = " + join(net.adam->v.data(), kParamCount) + "\n";
  }
  return body + "checksum = " + hex64(fnv1a(body)) + "\n";
}

SavedNetwork parse_weights(const std::string& text, const std::string& source) {
  const std::string marker = "checksum = ";
  const auto pos = text.rfind(marker);
  if (pos == std::string::npos || (pos > 0 && text[pos - 1] != '\n')) {
    fail(kCorrupt, source + ": missing checksum line (truncated file?)");
  }
  std::string stored = text.substr(pos + marker.size());
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
  const std::string body = text.substr(0, pos);
  if (stored != hex64(fnv1a(body))) fail(kCorrupt, source + ": checksum mismatch");

  std::map<std::string, std::string> kv;
  std::istringstream in(body);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) fail(kCorrupt, source + ":" + std::to_string(lineno) + ": malformed line");
    if (!kv.emplace(line.substr(0, eq), line.substr(eq + 3)).second) {
      fail(kCorrupt, source + ":" + std::to_string(lineno) + ": duplicate key");
    }
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(kCorrupt, source + ": missing '" + key + "'");
    return it->second;
  };

  if (get("format_version") != std::to_string(kWeightsFormatVersion)) {
    fail(kCorrupt, source + ": unsupported format_version " + get("format_version"));
  }
  if (get("layer_dims") != "6 6 6 1") {
    fail(kCorrupt, source + ": network shape " + get("layer_dims") + " does not match 6 6 6 1");
  }

  SavedNetwork net;
  NetParams& p = net.params;
  {
    const std::string& s = get("seed");
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), p.seed);
    if (ec != std::errc{} || ptr != s.data() + s.size()) fail(kCorrupt, source + ": malformed seed");
  }
  const auto shift = numbers(source, "input_shift", get("input_shift"), kInputs);
  const auto scale = numbers(source, "input_scale", get("input_scale"), kInputs);
  std::copy(shift.begin(), shift.end(), p.norm.shift.begin());
  std::copy(scale.begin(), scale.end(), p.norm.scale.begin());
  for (std::size_t l = 0; l < kLayers.size(); ++l) {
    const LayerOffsets& o = kLayers[l];
    const auto w = numbers(source, kLayerKeys[l].weights, get(kLayerKeys[l].weights), o.rows * o.cols);
    const auto b = numbers(source, kLayerKeys[l].bias, get(kLayerKeys[l].bias), o.rows);
    std::copy(w.begin(), w.end(), p.values.begin() + static_cast<std::ptrdiff_t>(o.weights));
    std::copy(b.begin(), b.end(), p.values.begin() + static_cast<std::ptrdiff_t>(o.bias));
  }
  if (kv.count("adam_step")) {
    AdamState a;
    const std::string& s = kv["adam_step"];
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), a.step);
    if (ec != std::errc{} || ptr != s.data() + s.size()) fail(kCorrupt, source + ": malformed adam_step");
    a.m = numbers(source, "adam_m", get("adam_m"), kParamCount);
    a.v = numbers(source, "adam_v", get("adam_v"), kParamCount);
    net.adam = std::move(a);
  }
  try {
    validate(p);
  } catch (const Error& e) {
    fail(kCorrupt, source + ": " + e.what());
  }
  return net;
}

void save_weights(const std::filesystem::path& path, const SavedNetwork& net) {
  const std::string text = weights_text(net);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::contract, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCategory::contract, "write failed for " + path.string());
}

SavedNetwork load_weights(const std::filesystem::path& path) {
  return parse_weights(read_text_file(path, ErrorCategory::parse), path.string());
}

}  // namespace iol
