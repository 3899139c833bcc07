#pragma once

// Learned or fitted one-step models behind a common interface, and their
// on-disk form.
//
// A model directory holds manifest.json ({"kind": "ensemble" | "sim-model",
// ...}) and either ensemble.json (tensor file: particle_<l>, log_std,
// x_mean, x_std, y_mean, y_std) or params.txt plus residual_std in the
// manifest.

#include <memory>
#include <string>

#include "json.hpp"
#include "mblab/bnn/ensemble.hpp"
#include "mblab/kinematics/sim_model.hpp"

namespace mblab::bnn {

class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual std::size_t num_members() const = 0;
  // Raw encoded differences of member m for raw model-input rows x.
  virtual RowMatrix predict(std::size_t member, const RowMatrix& x) const = 0;
  virtual std::string kind() const = 0;
};

class EnsembleModel final : public DynamicsModel {
 public:
  explicit EnsembleModel(Ensemble e) : e_(std::move(e)) {}
  std::size_t num_members() const override { return e_.size(); }
  RowMatrix predict(std::size_t member, const RowMatrix& x) const override { return e_.predict_mean(member, x); }
  std::string kind() const override { return "ensemble"; }
  const Ensemble& ensemble() const { return e_; }

 private:
  Ensemble e_;
};

class SimDynamicsModel final : public DynamicsModel {
 public:
  explicit SimDynamicsModel(kinematics::SimModel m) : m_(std::move(m)) {}
  std::size_t num_members() const override { return 1; }
  RowMatrix predict(std::size_t member, const RowMatrix& x) const override;
  std::string kind() const override { return "sim-model"; }
  const kinematics::SimModel& model() const { return m_; }

 private:
  kinematics::SimModel m_;
};

// `meta` is merged into the manifest.
void save_ensemble(const std::string& dir, const Ensemble& e, const nlohmann::json& meta = nlohmann::json::object());
Ensemble load_ensemble(const std::string& dir);
void save_sim_model(const std::string& dir, const kinematics::SimModel& m,
                    const nlohmann::json& meta = nlohmann::json::object());
kinematics::SimModel load_sim_model(const std::string& dir);

nlohmann::json load_manifest(const std::string& dir);
std::unique_ptr<DynamicsModel> load_dynamics_model(const std::string& dir);

}  // namespace mblab::bnn
