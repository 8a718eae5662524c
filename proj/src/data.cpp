#include "synlearn/data.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace synlearn {

void Dataset::push_back(Observation obs) {
  if (task_ == Task::Logistic) {
    if (obs.label != 0 && obs.label != 1) {
      throw std::invalid_argument("Dataset: label must be 0 or 1, got " +
                                  std::to_string(obs.label));
    }
    if (observations_.empty()) {
      feature_dim_ = obs.features.size();
    } else if (obs.features.size() != feature_dim_) {
      throw std::invalid_argument("Dataset: inconsistent feature dimension");
    }
  }
  observations_.push_back(std::move(obs));
}

std::vector<double> Dataset::values() const {
  if (task_ != Task::Gaussian) {
    throw std::logic_error("Dataset::values: not a scalar dataset");
  }
  std::vector<double> out;
  out.reserve(observations_.size());
  for (const auto& o : observations_) out.push_back(o.value);
  return out;
}

Dataset Dataset::from_values(const std::vector<double>& values, Provenance provenance) {
  Dataset d(Task::Gaussian, provenance);
  for (double v : values) d.push_back(Observation::scalar(v));
  return d;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, const std::filesystem::path& path,
                  std::size_t row) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r'))
    --end;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error(path.string() + ": non-numeric cell '" + cell +
                             "' in row " + std::to_string(row));
  }
  return v;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  std::size_t e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, Task task, Provenance provenance) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_csv: cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_csv: empty file " + path.string());
  }
  const auto header = split_line(line);
  std::size_t label_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == "label") label_col = i;
  }
  if (task == Task::Logistic) {
    if (label_col == header.size()) {
      throw std::runtime_error("load_csv: logistic file lacks a 'label' column: " +
                               path.string());
    }
    if (header.size() < 2) {
      throw std::runtime_error("load_csv: logistic file needs feature columns: " +
                               path.string());
    }
  }

  Dataset data(task, provenance);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(row) +
                               " has " + std::to_string(cells.size()) +
                               " cells, expected " + std::to_string(header.size()));
    }
    if (task == Task::Gaussian) {
      data.push_back(Observation::scalar(parse_cell(cells[0], path, row)));
    } else {
      std::vector<double> feats;
      feats.reserve(cells.size() - 1);
      int label = 0;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const double v = parse_cell(cells[i], path, row);
        if (i == label_col) {
          if (v != 0.0 && v != 1.0) {
            throw std::runtime_error(path.string() + ": row " + std::to_string(row) +
                                     " label outside {0,1}");
          }
          label = static_cast<int>(v);
        } else {
          feats.push_back(v);
        }
      }
      data.push_back(Observation::labelled(std::move(feats), label));
    }
  }
  return data;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_csv: cannot open " + path.string());
  }
  if (data.task() == Task::Gaussian) {
    out << "value\n";
    for (const auto& o : data.observations()) out << format_double(o.value) << "\n";
  } else {
    for (std::size_t j = 0; j < data.feature_dim(); ++j) out << "f" << (j + 1) << ",";
    out << "label\n";
    for (const auto& o : data.observations()) {
      for (double f : o.features) out << format_double(f) << ",";
      out << o.label << "\n";
    }
  }
  if (!out) {
    throw std::runtime_error("write_csv: write failed for " + path.string());
  }
}

Orientation orientation_of(CriterionKind kind) {
  return kind == CriterionKind::Auroc ? Orientation::HigherBetter
                                      : Orientation::LowerBetter;
}

std::string to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::LogScore: return "logscore";
    case CriterionKind::Kld: return "kld";
    case CriterionKind::Wasserstein1: return "wasserstein1";
    case CriterionKind::Auroc: return "auroc";
  }
  return "unknown";
}

CriterionKind criterion_from_string(const std::string& name) {
  if (name == "logscore") return CriterionKind::LogScore;
  if (name == "kld") return CriterionKind::Kld;
  if (name == "wasserstein1") return CriterionKind::Wasserstein1;
  if (name == "auroc") return CriterionKind::Auroc;
  throw std::invalid_argument("unknown criterion: " + name);
}

}  // namespace synlearn
