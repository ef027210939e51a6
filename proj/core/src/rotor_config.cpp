#include "rotorgw/rotor_config.hpp"

#include "rotorgw/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace rotorgw {

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr double kTieTolerance = 1e-12;

void validate_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ValidationError("rotor matrix has no rows");
  if (rows.size() > kMaxOffspring) throw ValidationError("rotor matrix has more rows than k_max");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const unsigned k = static_cast<unsigned>(i + 1);
    if (rows[i].size() != k + 1) {
      throw ValidationError("row " + std::to_string(k) + " must have " + std::to_string(k + 1) + " entries");
    }
    double sum = 0.0;
    for (double v : rows[i]) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("rotor matrix entries must be finite and >= 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      throw ValidationError("row " + std::to_string(k) + " does not sum to 1");
    }
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const auto next = text.find(sep, pos);
    parts.push_back(text.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return parts;
}

}  // namespace

RotorMatrix RotorMatrix::from_rows(std::vector<std::vector<double>> rows) {
  validate_rows(rows);
  RotorMatrix m;
  m.rows_ = std::move(rows);
  m.build_cumulative();
  return m;
}

RotorMatrix RotorMatrix::from_exact_rows(std::vector<std::vector<Rational>> rows) {
  std::vector<std::vector<double>> approx;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Rational sum = 0;
    std::vector<double> row;
    for (const Rational& v : rows[i]) {
      if (v < 0) throw ValidationError("rotor matrix entries must be >= 0");
      sum += v;
      row.push_back(to_double(v));
    }
    if (rows[i].size() == i + 2 && sum != 1) {
      throw ValidationError("row " + std::to_string(i + 1) + " sums to " + to_string(sum) + ", expected 1");
    }
    approx.push_back(std::move(row));
  }
  RotorMatrix m = from_rows(std::move(approx));
  m.exact_ = std::move(rows);
  return m;
}

RotorMatrix RotorMatrix::uniform(unsigned k_max) {
  if (k_max == 0 || k_max > kMaxOffspring) throw ValidationError("uniform rotor matrix needs 1 <= k_max <= 126");
  std::vector<std::vector<Rational>> rows;
  for (unsigned k = 1; k <= k_max; ++k) rows.emplace_back(k + 1, Rational(1, k + 1));
  RotorMatrix m = from_exact_rows(std::move(rows));
  m.uniform_ = true;
  return m;
}

RotorMatrix RotorMatrix::parse(std::string_view spec) {
  std::string text;
  for (char c : spec) {
    if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
  }
  if (text == "uniform") return uniform();
  constexpr std::string_view kPrefix = "rows:";
  if (text.rfind(kPrefix, 0) != 0) {
    throw ValidationError("rotor matrix spec must be 'uniform' or 'rows:...', got '" + std::string(spec) + "'");
  }
  std::vector<std::vector<Rational>> rows;
  for (const std::string& row_text : split(text.substr(kPrefix.size()), ';')) {
    if (row_text.empty()) throw ValidationError("empty row in rotor matrix spec");
    std::vector<Rational> row;
    for (const std::string& entry : split(row_text, ',')) row.push_back(parse_rational(entry));
    rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != i + 2) {
      throw ValidationError("row " + std::to_string(i + 1) + " must have " + std::to_string(i + 2) + " entries");
    }
  }
  return from_exact_rows(std::move(rows));
}

void RotorMatrix::build_cumulative() {
  cumulative_.clear();
  for (const auto& row : rows_) {
    std::vector<double> cum(row.size());
    double acc = 0.0;
    for (std::size_t l = 0; l < row.size(); ++l) {
      acc += row[l];
      cum[l] = acc;
    }
    // Pin the last positive entry to 1 so u < 1 never falls off the table.
    auto last = row.size();
    while (last > 0 && row[last - 1] == 0.0) --last;
    for (std::size_t l = last == 0 ? 0 : last - 1; l < cum.size(); ++l) cum[l] = 1.0;
    cumulative_.push_back(std::move(cum));
  }
}

double RotorMatrix::q(unsigned k, unsigned l) const {
  if (k == 0 || k > k_max()) throw ValidationError("rotor matrix has no row " + std::to_string(k));
  if (l > k) return 0.0;
  return rows_[k - 1][l];
}

std::span<const double> RotorMatrix::row(unsigned k) const {
  if (k == 0 || k > k_max()) throw ValidationError("rotor matrix has no row " + std::to_string(k));
  return rows_[k - 1];
}

unsigned RotorMatrix::sample(unsigned d, double u) const {
  if (d == 0 || d > k_max()) {
    throw ValidationError("child count " + std::to_string(d) + " outside rotor matrix support 1.." +
                          std::to_string(k_max()));
  }
  const auto& cum = cumulative_[d - 1];
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  const auto l = static_cast<unsigned>(std::min<std::ptrdiff_t>(it - cum.begin(), d));
  return d - l;
}

std::string RotorMatrix::describe() const {
  if (uniform_) return "uniform";
  std::ostringstream out;
  out.precision(17);
  out << "rows:";
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (i) out << ';';
    for (std::size_t l = 0; l < rows_[i].size(); ++l) {
      if (l) out << ',';
      if (exact_) {
        out << to_string((*exact_)[i][l]);
      } else {
        out << rows_[i][l];
      }
    }
  }
  return out.str();
}

void assign_rotor(TreeArena& arena, NodeId id, const RotorMatrix& q) {
  Node& n = arena.mutable_node(id);
  if (n.has_rotor()) return;
  if (!n.expanded()) throw UsageError("assign_rotor needs the child count; expand the node first");
  const unsigned rho = q.sample(n.child_count, keyed_uniform(n.key, Stream::kRotor));
  n.rotor = static_cast<std::int8_t>(rho);
}

std::vector<unsigned> good_children(const Node& node) {
  if (!node.has_rotor()) throw UsageError("good_children called on a node with unset rotor");
  if (!node.expanded()) throw UsageError("good_children called on an unexpanded node");
  std::vector<unsigned> out;
  for (unsigned k = static_cast<unsigned>(node.rotor) + 1; k <= node.child_count; ++k) out.push_back(k);
  return out;
}

GoodChildrenLaw good_children_law(const OffspringDistribution& xi, const RotorMatrix& q) {
  if (q.k_max() < xi.k_max()) {
    throw ValidationError("rotor matrix covers k <= " + std::to_string(q.k_max()) + " but the offspring law needs " +
                          std::to_string(xi.k_max()));
  }
  const unsigned kmax = xi.k_max();
  GoodChildrenLaw law;
  law.probs.assign(kmax + 1, 0.0);
  for (unsigned k = 1; k <= kmax; ++k) {
    for (unsigned l = 0; l <= k; ++l) law.probs[l] += xi.p(k) * q.q(k, l);
  }
  for (unsigned l = 0; l <= kmax; ++l) law.mean += l * law.probs[l];

  if (xi.exact() && q.exact()) {
    const auto& p = *xi.exact();
    const auto& rows = *q.exact();
    std::vector<Rational> nu(kmax + 1, Rational(0));
    for (unsigned k = 1; k <= kmax; ++k) {
      for (unsigned l = 0; l <= k; ++l) nu[l] += p[k - 1] * rows[k - 1][l];
    }
    Rational mean = 0;
    for (unsigned l = 0; l <= kmax; ++l) mean += Rational(l) * nu[l];
    law.exact_probs = std::move(nu);
    law.exact_mean = mean;
  }
  return law;
}

Classification classify(const OffspringDistribution& xi, const RotorMatrix& q) {
  GoodChildrenLaw law = good_children_law(xi, q);
  Classification c{Verdict::kRecurrent, law.mean, false, {}};
  if (law.exact_mean) {
    c.exact = true;
    c.verdict = *law.exact_mean <= 1 ? Verdict::kRecurrent : Verdict::kTransient;
  } else {
    c.verdict = law.mean <= 1.0 + kTieTolerance ? Verdict::kRecurrent : Verdict::kTransient;
  }
  if (law.exact_probs) {
    c.degenerate = law.exact_probs->size() > 1 && (*law.exact_probs)[1] == 1;
  } else {
    c.degenerate = law.probs.size() > 1 && law.probs[1] >= 1.0 - kTieTolerance;
  }
  c.law = std::move(law);
  return c;
}

std::string to_string(Verdict v) { return v == Verdict::kRecurrent ? "recurrent" : "transient"; }

}  // namespace rotorgw
