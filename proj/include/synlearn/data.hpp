#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace synlearn {

enum class Task { Gaussian, Logistic };
enum class Provenance { Real, Synthetic };

/// One observation: a scalar for Gaussian tasks, a feature vector plus a
/// binary label for logistic tasks.
struct Observation {
  double value = 0.0;
  std::vector<double> features;
  int label = 0;

  static Observation scalar(double v) {
    Observation o;
    o.value = v;
    return o;
  }
  static Observation labelled(std::vector<double> x, int y) {
    Observation o;
    o.features = std::move(x);
    o.label = y;
    return o;
  }
};

/// Ordered, task-homogeneous collection of observations. Empty datasets are
/// legal (no learner data is a valid starting point). Immutable in spirit:
/// build it, then share it read-only.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Task task, Provenance provenance = Provenance::Real)
      : task_(task), provenance_(provenance) {}

  /// Appends an observation, enforcing label and feature-width invariants.
  void push_back(Observation obs);

  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }
  const Observation& operator[](std::size_t i) const { return observations_[i]; }
  const std::vector<Observation>& observations() const { return observations_; }

  Task task() const { return task_; }
  Provenance provenance() const { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = p; }

  /// Feature dimension of a logistic dataset (0 when empty).
  std::size_t feature_dim() const { return feature_dim_; }

  /// Scalar payloads of a Gaussian dataset.
  std::vector<double> values() const;

  static Dataset from_values(const std::vector<double>& values,
                             Provenance provenance = Provenance::Real);

 private:
  Task task_ = Task::Gaussian;
  Provenance provenance_ = Provenance::Real;
  std::size_t feature_dim_ = 0;
  std::vector<Observation> observations_;
};

/// Loads a UTF-8 comma-separated file with one header row. Gaussian files
/// have a single `value` column; logistic files have feature columns plus a
/// `label` column (located by name, features keep file order). Parsing is
/// locale-independent.
Dataset load_csv(const std::filesystem::path& path, Task task,
                 Provenance provenance = Provenance::Real);

/// Writes the matching CSV; floats carry 17 significant digits so a
/// load/write round trip is exact.
void write_csv(const Dataset& data, const std::filesystem::path& path);

/// Formats a double with enough digits to round-trip.
std::string format_double(double v);

enum class CriterionKind { LogScore, Kld, Wasserstein1, Auroc };
enum class Orientation { LowerBetter, HigherBetter };

Orientation orientation_of(CriterionKind kind);
std::string to_string(CriterionKind kind);
CriterionKind criterion_from_string(const std::string& name);

}  // namespace synlearn
