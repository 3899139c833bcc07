#include "mblab/diffcore/tensor_io.hpp"

#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace mblab::diffcore {

NamedTensor NamedTensor::from_vector(std::string name, const Eigen::VectorXd& v) {
  return NamedTensor{std::move(name), {static_cast<std::size_t>(v.size())},
                     std::vector<double>(v.data(), v.data() + v.size())};
}

Eigen::VectorXd NamedTensor::to_vector() const {
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

const NamedTensor& TensorFile::at(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("tensor '" + name + "' not found");
}

void save_tensors(const std::string& path, const TensorFile& file) {
  nlohmann::json doc;
  doc["format"] = "mblab-tensors";
  doc["version"] = kTensorFormatVersion;
  doc["meta"] = file.meta;
  doc["tensors"] = nlohmann::json::array();
  for (const auto& t : file.tensors) {
    const std::size_t count = std::accumulate(t.shape.begin(), t.shape.end(), std::size_t{1},
                                              std::multiplies<>());
    if (count != t.data.size()) throw std::invalid_argument("tensor '" + t.name + "': shape/data mismatch");
    doc["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"data", t.data}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

TensorFile load_tensors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.value("format", "") != "mblab-tensors") throw std::runtime_error(path + ": not a tensor file");
  if (doc.value("version", 0) != kTensorFormatVersion) {
    throw std::runtime_error(path + ": unsupported tensor format version");
  }
  TensorFile file;
  file.meta = doc.value("meta", nlohmann::json::object());
  for (const auto& t : doc.at("tensors")) {
    NamedTensor nt{t.at("name").get<std::string>(), t.at("shape").get<std::vector<std::size_t>>(),
                   t.at("data").get<std::vector<double>>()};
    const std::size_t count = std::accumulate(nt.shape.begin(), nt.shape.end(), std::size_t{1},
                                              std::multiplies<>());
    if (count != nt.data.size()) throw std::runtime_error(path + ": tensor '" + nt.name + "' is truncated");
    file.tensors.push_back(std::move(nt));
  }
  return file;
}

}  // namespace mblab::diffcore
