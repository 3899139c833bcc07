#include "mblab/bnn/dynamics_model.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "mblab/diffcore/tensor_io.hpp"

namespace mblab::bnn {
namespace {

namespace fs = std::filesystem;
using diffcore::NamedTensor;
using nlohmann::json;

NamedTensor row_tensor(std::string name, const Eigen::RowVectorXd& v) {
  return NamedTensor{std::move(name), {static_cast<std::size_t>(v.size())},
                     std::vector<double>(v.data(), v.data() + v.size())};
}

Eigen::RowVectorXd row_of(const NamedTensor& t) { return t.to_vector().transpose(); }

void write_manifest(const std::string& dir, const json& manifest) {
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

}  // namespace

RowMatrix SimDynamicsModel::predict(std::size_t member, const RowMatrix& x) const {
  if (member != 0) throw std::out_of_range("sim model has a single member");
  RowMatrix out(x.rows(), static_cast<Eigen::Index>(kEncodedDim));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto d = m_.predict(std::span<const double, kInputDim>(x.row(r).data(), kInputDim));
    for (std::size_t j = 0; j < kEncodedDim; ++j) out(r, static_cast<Eigen::Index>(j)) = d[j];
  }
  return out;
}

void save_ensemble(const std::string& dir, const Ensemble& e, const json& meta) {
  fs::create_directories(dir);
  diffcore::TensorFile f;
  f.meta["widths"] = e.net().widths();
  f.meta["hidden_activation"] = diffcore::to_string(e.net().hidden_activation());
  f.meta["particles"] = e.size();
  for (std::size_t l = 0; l < e.size(); ++l) {
    f.tensors.push_back(NamedTensor::from_vector("particle_" + std::to_string(l), e.params(l)));
  }
  const RowMatrix& ls = e.log_std();
  f.tensors.push_back(NamedTensor{"log_std", {static_cast<std::size_t>(ls.rows()), static_cast<std::size_t>(ls.cols())},
                                  std::vector<double>(ls.data(), ls.data() + ls.size())});
  const Normalizer& n = e.normalizer();
  f.tensors.push_back(row_tensor("x_mean", n.x_mean));
  f.tensors.push_back(row_tensor("x_std", n.x_std));
  f.tensors.push_back(row_tensor("y_mean", n.y_mean));
  f.tensors.push_back(row_tensor("y_std", n.y_std));
  diffcore::save_tensors((fs::path(dir) / "ensemble.json").string(), f);

  json manifest = meta;
  manifest["kind"] = "ensemble";
  manifest["particles"] = e.size();
  write_manifest(dir, manifest);
}

Ensemble load_ensemble(const std::string& dir) {
  const diffcore::TensorFile f = diffcore::load_tensors((fs::path(dir) / "ensemble.json").string());
  const auto widths = f.meta.at("widths").get<std::vector<std::size_t>>();
  diffcore::Mlp net(widths, diffcore::activation_from_string(f.meta.at("hidden_activation").get<std::string>()));
  const auto particles = f.meta.at("particles").get<std::size_t>();
  std::vector<diffcore::Vector> params;
  for (std::size_t l = 0; l < particles; ++l) params.push_back(f.at("particle_" + std::to_string(l)).to_vector());
  const NamedTensor& ls = f.at("log_std");
  if (ls.shape.size() != 2) throw std::runtime_error(dir + ": log_std must be a matrix");
  RowMatrix log_std = Eigen::Map<const RowMatrix>(ls.data.data(), static_cast<Eigen::Index>(ls.shape[0]),
                                                  static_cast<Eigen::Index>(ls.shape[1]));
  Normalizer n;
  n.x_mean = row_of(f.at("x_mean"));
  n.x_std = row_of(f.at("x_std"));
  n.y_mean = row_of(f.at("y_mean"));
  n.y_std = row_of(f.at("y_std"));
  return Ensemble(std::move(net), std::move(n), std::move(params), std::move(log_std));
}

void save_sim_model(const std::string& dir, const kinematics::SimModel& m, const json& meta) {
  fs::create_directories(dir);
  kinematics::save_params((fs::path(dir) / "params.txt").string(), m.params);
  json manifest = meta;
  manifest["kind"] = "sim-model";
  manifest["dt"] = m.dt;
  manifest["residual_std"] = m.residual_std;
  write_manifest(dir, manifest);
}

kinematics::SimModel load_sim_model(const std::string& dir) {
  const json manifest = load_manifest(dir);
  kinematics::SimModel m;
  m.params = kinematics::load_params((fs::path(dir) / "params.txt").string());
  m.dt = manifest.at("dt").get<double>();
  m.residual_std = manifest.at("residual_std").get<std::array<double, kEncodedDim>>();
  return m;
}

json load_manifest(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json in " + dir);
  return json::parse(in);
}

std::unique_ptr<DynamicsModel> load_dynamics_model(const std::string& dir) {
  const std::string kind = load_manifest(dir).at("kind").get<std::string>();
  if (kind == "ensemble") return std::make_unique<EnsembleModel>(load_ensemble(dir));
  if (kind == "sim-model") return std::make_unique<SimDynamicsModel>(load_sim_model(dir));
  throw std::runtime_error(dir + ": unknown model kind '" + kind + "'");
}

}  // namespace mblab::bnn
