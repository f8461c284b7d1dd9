#include "spillover/exposure.hpp"

#include <algorithm>
#include <sstream>

#include "spillover/csv.hpp"
#include "spillover/errors.hpp"

namespace spillover {

std::size_t condition_count(ExposureKind kind) {
  return std::size_t{2} << static_cast<int>(kind);
}

const std::vector<std::string>& condition_labels(ExposureKind kind) {
  static const std::vector<std::string> none{"dir", "no"};
  static const std::vector<std::string> hop1{"dir_ind1", "isol_dir", "ind1", "no"};
  static const std::vector<std::string> hop2{"dir_ind1_ind2", "dir_ind1", "dir_ind2", "isol_dir",
                                             "ind1_ind2",     "ind1",     "ind2",     "no"};
  switch (kind) {
    case ExposureKind::kNone: return none;
    case ExposureKind::kHop1: return hop1;
    case ExposureKind::kHop2: return hop2;
  }
  return hop1;
}

std::string condition_symbol(ExposureKind kind, Condition c) {
  const int bits = static_cast<int>(kind) + 1;
  const int code = static_cast<int>(condition_count(kind)) - 1 - c;
  std::string out = "d";
  for (int b = bits - 1; b >= 0; --b) out += ((code >> b) & 1) ? '1' : '0';
  return out;
}

std::optional<Condition> find_condition(ExposureKind kind, std::string_view label) {
  const auto& labels = condition_labels(kind);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == label || condition_symbol(kind, static_cast<Condition>(k)) == label) {
      return static_cast<Condition>(k);
    }
  }
  return std::nullopt;
}

std::string to_string(ExposureKind kind) {
  switch (kind) {
    case ExposureKind::kNone: return "none";
    case ExposureKind::kHop1: return "hop1";
    case ExposureKind::kHop2: return "hop2";
  }
  return "unknown";
}

ExposureKind parse_exposure_kind(std::string_view text) {
  if (text == "none" || text == "0") return ExposureKind::kNone;
  if (text == "hop1" || text == "1") return ExposureKind::kHop1;
  if (text == "hop2" || text == "2") return ExposureKind::kHop2;
  throw ParameterError("unknown exposure mapping '" + std::string(text) +
                       "' (expected none, hop1 or hop2)");
}

std::size_t ExposureMatrix::count(Condition k) const {
  return static_cast<std::size_t>(std::count(condition.begin(), condition.end(), k));
}

ExposureMapper::ExposureMapper(const Graph& g, ExposureKind kind) : graph_(&g), kind_(kind) {
  if (kind == ExposureKind::kHop2) second_ = second_degree_sets(g);
}

void ExposureMapper::map_into(std::span<const std::uint8_t> z, std::span<Condition> out) const {
  const std::size_t n = graph_->size();
  if (z.size() != n || out.size() != n) {
    throw ParameterError("assignment length " + std::to_string(z.size()) +
                         " does not match the graph's " + std::to_string(n) + " units");
  }
  for (UnitId i = 0; i < n; ++i) {
    const int own = z[i] ? 1 : 0;
    int code = own;
    if (kind_ != ExposureKind::kNone) {
      int peer = 0;
      for (UnitId j : graph_->neighbors(i)) {
        if (z[j]) {
          peer = 1;
          break;
        }
      }
      code = (code << 1) | peer;
      if (kind_ == ExposureKind::kHop2) {
        int second = 0;
        for (UnitId j : second_[i]) {
          if (z[j]) {
            second = 1;
            break;
          }
        }
        code = (code << 1) | second;
      }
    }
    out[i] = static_cast<Condition>(static_cast<int>(condition_count(kind_)) - 1 - code);
  }
}

ExposureMatrix ExposureMapper::map(std::span<const std::uint8_t> z) const {
  ExposureMatrix e;
  e.kind = kind_;
  e.condition.resize(graph_->size());
  map_into(z, e.condition);
  return e;
}

ExposureMatrix map_exposures(const Graph& g, std::span<const std::uint8_t> z, ExposureKind kind) {
  return ExposureMapper(g, kind).map(z);
}

std::size_t ExposureProbabilities::pair_index(Condition k, Condition l) const {
  const std::size_t kk = conditions();
  return static_cast<std::size_t>(k) * kk - static_cast<std::size_t>(k) * (k - 1) / 2 + (l - k);
}

double ExposureProbabilities::joint(Condition k, Condition l, std::size_t i, std::size_t j) const {
  if (joint_.empty()) {
    throw EstimationError("joint exposure probabilities were not computed; request them "
                          "when estimating probabilities");
  }
  if (k <= l) return joint_[pair_index(k, l)](static_cast<Eigen::Index>(i),
                                              static_cast<Eigen::Index>(j));
  return joint_[pair_index(l, k)](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
}

std::size_t ExposureProbabilities::zero_joint_count(Condition k, Condition l, std::size_t i) const {
  if (joint_.empty()) {
    throw EstimationError("joint exposure probabilities were not computed");
  }
  return zero_counts_[(static_cast<std::size_t>(k) * conditions() + l) * units() + i];
}

ExposureProbabilities exposure_probabilities(const ExposureMapper& mapper, const AssignmentSet& a,
                                             bool want_joint) {
  const std::size_t n = mapper.units();
  if (a.units() != n) throw ParameterError("assignment set and graph disagree on unit count");
  if (a.empty()) throw ParameterError("assignment set is empty");
  const std::size_t kk = condition_count(mapper.kind());
  const std::size_t reps = a.size();
  const auto ni = static_cast<Eigen::Index>(n);

  ExposureProbabilities out;
  out.kind_ = mapper.kind();
  out.replicates_ = reps;
  out.exact_ = a.kind() == DesignKind::kEnumerated;

  // Integer tallies throughout; one division at the end keeps the result
  // independent of how replicates are chunked.
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kk), ni);
  std::vector<Eigen::MatrixXd> joint_counts;
  if (want_joint) joint_counts.assign(kk * (kk + 1) / 2, Eigen::MatrixXd::Zero(ni, ni));

  // Chunks of <= 2^12 rows keep every float partial sum an exact integer.
  constexpr std::size_t kChunk = 1024;
  std::vector<Condition> cond(n);
  std::vector<Eigen::MatrixXf> indicator(want_joint ? kk : 0);
  for (std::size_t start = 0; start < reps; start += kChunk) {
    const std::size_t rows = std::min(kChunk, reps - start);
    for (auto& x : indicator) x.setZero(static_cast<Eigen::Index>(rows), ni);
    for (std::size_t r = 0; r < rows; ++r) {
      mapper.map_into(a[start + r], cond);
      for (std::size_t i = 0; i < n; ++i) {
        counts(cond[i], static_cast<Eigen::Index>(i)) += 1.0;
        if (want_joint) indicator[cond[i]](static_cast<Eigen::Index>(r),
                                           static_cast<Eigen::Index>(i)) = 1.0f;
      }
    }
    if (!want_joint) continue;
    std::size_t idx = 0;
    for (std::size_t k = 0; k < kk; ++k) {
      for (std::size_t l = k; l < kk; ++l, ++idx) {
        Eigen::MatrixXf product = indicator[k].transpose() * indicator[l];
        joint_counts[idx] += product.cast<double>();
      }
    }
  }

  const double denom = static_cast<double>(reps);
  out.individual_ = counts / denom;
  if (want_joint) {
    out.joint_.reserve(joint_counts.size());
    for (auto& m : joint_counts) out.joint_.push_back(m / denom);

    out.zero_counts_.assign(kk * kk * n, 0);
    for (std::size_t k = 0; k < kk; ++k) {
      for (std::size_t l = 0; l < kk; ++l) {
        for (std::size_t i = 0; i < n; ++i) {
          std::uint32_t zeros = 0;
          for (std::size_t j = 0; j < n; ++j) {
            if (j != i && out.joint(static_cast<Condition>(k), static_cast<Condition>(l), i, j) == 0.0) {
              ++zeros;
            }
          }
          out.zero_counts_[(k * kk + l) * n + i] = zeros;
        }
      }
    }
  }
  return out;
}

ExposureProbabilities exposure_probabilities(const Graph& g, const AssignmentSet& a,
                                             ExposureKind kind, bool want_joint) {
  return exposure_probabilities(ExposureMapper(g, kind), a, want_joint);
}

std::string format_probabilities(const ExposureProbabilities& probs, bool include_joint) {
  std::ostringstream out;
  const auto& labels = condition_labels(probs.kind());
  out << "# exact=" << (probs.exact() ? 1 : 0) << " replicates=" << probs.replicates()
      << " mapping=" << to_string(probs.kind()) << '\n';
  const bool joint = include_joint && probs.has_joint();
  out << (joint ? "unit,unit_j,condition,condition_j,prob\n" : "unit,condition,prob\n");
  const std::size_t kk = probs.conditions();
  for (std::size_t i = 0; i < probs.units(); ++i) {
    for (std::size_t k = 0; k < kk; ++k) {
      const char* gap = joint ? ",," : ",";
      out << i << gap << labels[k] << gap
          << csv::format_double(probs.individual(static_cast<Condition>(k), i)) << '\n';
    }
  }
  if (joint) {
    for (std::size_t i = 0; i < probs.units(); ++i) {
      for (std::size_t j = 0; j < probs.units(); ++j) {
        if (i == j) continue;
        for (std::size_t k = 0; k < kk; ++k) {
          for (std::size_t l = 0; l < kk; ++l) {
            const double p = probs.joint(static_cast<Condition>(k), static_cast<Condition>(l), i, j);
            if (p == 0.0) continue;
            out << i << ',' << j << ',' << labels[k] << ',' << labels[l] << ','
                << csv::format_double(p) << '\n';
          }
        }
      }
    }
  }
  return out.str();
}

ConditionCorrespondence misspecify(ExposureKind truth, ExposureKind assumed) {
  ConditionCorrespondence out{truth, assumed, {}};
  const int t = static_cast<int>(truth);
  const int s = static_cast<int>(assumed);
  const std::size_t kt = condition_count(truth);
  out.image.resize(kt);
  for (std::size_t c = 0; c < kt; ++c) {
    if (s <= t) {
      // Coarser analysis: drop the trailing indicators.
      out.image[c].push_back(static_cast<Condition>(c >> (t - s)));
    } else {
      // Finer analysis: every refinement of the true condition.
      const std::size_t width = std::size_t{1} << (s - t);
      for (std::size_t r = 0; r < width; ++r) {
        out.image[c].push_back(static_cast<Condition>((c << (s - t)) | r));
      }
    }
  }
  return out;
}

}  // namespace spillover
