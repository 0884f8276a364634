#include "genlab/cli/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "genlab/cli/config.hpp"
#include "genlab/csv.hpp"
#include "genlab/errors.hpp"

namespace genlab::cli {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == '"' || c == '\\') {
      out += '\\';
      out += ch;
    } else if (c < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\u%04x", c);
      out += buf;
    } else {
      out += ch;
    }
  }
  return out + "\"";
}

std::string number(double v, const std::string& where) {
  if (!std::isfinite(v)) throw NumericError("checkpoint: non-finite value in " + where);
  return csv::format_double(v);
}

void write_array(std::ostringstream& os, std::span<const double> v, const std::string& where) {
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << number(v[i], where);
  os << ']';
}

template <class T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw CheckpointError(std::string("checkpoint: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw CheckpointError(std::string("checkpoint: field '") + key + "' has the wrong type");
  }
}

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  throw CheckpointError("checkpoint: no tensor named '" + name + "'");
}

std::string to_json(const Checkpoint& c) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"format_version\": " << kCheckpointVersion << ",\n";
  os << "  \"kind\": " << quote(c.kind) << ",\n";
  os << "  \"data_dim\": " << c.data_dim << ",\n";
  os << "  \"config\": {";
  std::size_t i = 0;
  for (const auto& [k, v] : c.config) os << (i++ ? ",\n" : "\n") << "    " << quote(k) << ": " << quote(v);
  os << (c.config.empty() ? "},\n" : "\n  },\n");
  os << "  \"arrays\": {";
  i = 0;
  for (const auto& [k, v] : c.arrays) {
    os << (i++ ? ",\n" : "\n") << "    " << quote(k) << ": ";
    write_array(os, v, k);
  }
  os << (c.arrays.empty() ? "},\n" : "\n  },\n");
  os << "  \"rng\": {\"key\": " << c.rng.key << ", \"counter\": " << c.rng.counter
     << ", \"has_spare\": " << (c.rng.has_spare ? "true" : "false") << ", \"spare\": " << number(c.rng.spare, "rng")
     << "},\n";
  os << "  \"tensors\": [";
  i = 0;
  for (const auto& t : c.tensors) {
    os << (i++ ? ",\n" : "\n") << "    {\"name\": " << quote(t.name) << ", \"shape\": [" << t.value.rows() << ", "
       << t.value.cols() << "], \"values\": ";
    write_array(os, t.value.data(), t.name);
    os << '}';
  }
  os << (c.tensors.empty() ? "]\n" : "\n  ]\n");
  os << "}\n";
  return os.str();
}

Checkpoint from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw CheckpointError("checkpoint: top level is not an object");
  if (!j.contains("format_version") || !j.at("format_version").is_number_integer()) {
    throw VersionError("checkpoint: missing or non-integer format_version");
  }
  if (const auto v = j.at("format_version").get<long long>(); v != kCheckpointVersion) {
    throw VersionError("checkpoint: unsupported format_version " + std::to_string(v) + " (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  c.kind = field<std::string>(j, "kind");
  c.data_dim = field<std::size_t>(j, "data_dim");
  c.config = field<std::map<std::string, std::string>>(j, "config");
  c.arrays = field<std::map<std::string, std::vector<double>>>(j, "arrays");
  const auto rng = field<nlohmann::json>(j, "rng");
  c.rng.key = field<std::uint64_t>(rng, "key");
  c.rng.counter = field<std::uint64_t>(rng, "counter");
  c.rng.has_spare = field<bool>(rng, "has_spare");
  c.rng.spare = field<double>(rng, "spare");
  const auto tensors = field<nlohmann::json>(j, "tensors");
  if (!tensors.is_array()) throw CheckpointError("checkpoint: 'tensors' is not an array");
  for (const auto& t : tensors) {
    const auto name = field<std::string>(t, "name");
    const auto shape = field<std::vector<std::size_t>>(t, "shape");
    auto values = field<std::vector<double>>(t, "values");
    if (shape.size() != 2 || shape[0] * shape[1] != values.size()) {
      throw CheckpointError("checkpoint: tensor '" + name + "' shape does not match its value count");
    }
    c.tensors.push_back({name, Tensor(shape[0], shape[1], std::move(values))});
  }
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  const std::string text = to_json(c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  out << text;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace genlab::cli
