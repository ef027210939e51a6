#include "rotorgw/error.hpp"
#include "rotorgw/rotor_walk.hpp"

#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

using namespace rotorgw;

namespace {

const RotorMatrix& uniform_q() {
  static const RotorMatrix q = RotorMatrix::uniform();
  return q;
}

std::vector<std::int8_t> rotors_of(const TreeArena& a) {
  std::vector<std::int8_t> r(a.size());
  for (NodeId i = 0; i < a.size(); ++i) r[i] = a.node(i).rotor;
  return r;
}

}  // namespace

TEST_SUITE("rotor_walk") {

TEST_CASE("step increments then moves") {
  TreeArena a(OffspringDistribution::deterministic(2), 1);
  a.expand(0);
  a.set_rotor(0, 2);
  CHECK(step(a, 0, uniform_q()) == kSink);
  CHECK(a.node(0).rotor == 0);
  CHECK(step(a, 0, uniform_q()) == a.child(0, 1));
  CHECK(a.node(0).rotor == 1);
  CHECK_THROWS_AS(step(a, kSink, uniform_q()), UsageError);
}

TEST_CASE("d+1 steps visit every neighbour once") {
  TreeArena a(OffspringDistribution::deterministic(4), 3);
  a.expand(0);
  a.expand(1);
  const NodeId x = 1;
  a.set_rotor(x, 3);
  std::set<NodeId> seen;
  for (int i = 0; i < 5; ++i) seen.insert(step(a, x, uniform_q()));
  CHECK(seen.size() == 5);
  CHECK(seen.count(0) == 1);
  CHECK(a.node(x).rotor == 3);
}

TEST_CASE("run_walk on the half-line") {
  TreeArena a(OffspringDistribution::deterministic(1), 1);
  const auto view = truncate_view(a, 10);
  for (NodeId x : view.interior) a.set_rotor(x, 0);
  const WalkOutcome w = run_walk(a, uniform_q(), 10);
  CHECK(w.kind == WalkResult::kReachedBoundary);
  CHECK(w.steps == 10);
  CHECK(w.max_depth == 10);
}

TEST_CASE("run_walk returns in one step from a wrapped root") {
  TreeArena a(OffspringDistribution::deterministic(2), 1);
  a.expand(0);
  a.set_rotor(0, 2);
  const WalkOutcome w = run_walk(a, uniform_q(), 64);
  CHECK(w.kind == WalkResult::kReturned);
  CHECK(w.steps == 1);

  TreeArena b(OffspringDistribution::deterministic(2), 1);
  b.expand(0);
  b.set_rotor(0, 2);
  const EscapeStats s = escape_count(b, uniform_q(), 1, 64);
  CHECK(s.escapes == 0);
  CHECK(s.n == 1);
}

TEST_CASE("H = 1 is decided at the root") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    TreeArena a(OffspringDistribution::parse("p1=1/3,p2=1/3,p3=1/3"), seed);
    prepare_node(a, 0, uniform_q());
    const unsigned d = a.node(0).child_count;
    const bool escapes = (a.node(0).rotor + 1u) % (d + 1) != 0;
    const WalkOutcome w = run_walk(a, uniform_q(), 1);
    CHECK((w.kind == WalkResult::kReachedBoundary) == escapes);
    CHECK(w.steps == 1);
  }
  TreeArena a(OffspringDistribution::deterministic(2), 1);
  CHECK_THROWS_AS(run_walk(a, uniform_q(), 0), ValidationError);
}

TEST_CASE("half-line with every rotor at the child returns n times") {
  // walk k turns back at depth k - 1, so nothing reaches depth n
  const auto q = RotorMatrix::parse("rows:1,0");
  for (std::uint64_t n : {2, 7, 500}) {
    TreeArena a(OffspringDistribution::deterministic(1), 3);
    const EscapeStats s = escape_count(a, q, n, static_cast<int>(n));
    CHECK(s.escapes == 0);
    TreeArena b(OffspringDistribution::deterministic(1), 3);
    const EscapeStats t = escape_count(b, q, n, static_cast<int>(n) - 1);
    CHECK(t.escapes == 1);
    CHECK(t.outcomes.back() == 1);
  }
}

TEST_CASE("binary tree: escapes shrink with H") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::uint64_t prev = ~0ULL;
    for (int H : {4, 8, 16, 32}) {
      TreeArena a(OffspringDistribution::deterministic(2), seed);
      const EscapeStats s = escape_count(a, uniform_q(), 2000, H);
      CHECK(s.complete);
      CHECK(s.escapes <= prev);
      prev = s.escapes;
    }
  }
}

TEST_CASE("ternary tree escape rate") {
  TreeArena a(OffspringDistribution::deterministic(3), 9);
  const AdaptiveEscape r = escape_count_adaptive(a, uniform_q(), 20000);
  CHECK(r.converged);
  CHECK(r.stats.ratio() == doctest::Approx(2.0 / 3.0).epsilon(0.03));
  CHECK(r.history.size() >= 2);
}

TEST_CASE("escape_count bookkeeping") {
  TreeArena a(OffspringDistribution::parse("p2=1/2,p3=1/2"), 4);
  const EscapeStats s = escape_count(a, uniform_q(), 500, 12);
  std::uint64_t sum = 0;
  for (auto e : s.outcomes) sum += e;
  CHECK(sum == s.escapes);
  CHECK(s.outcomes.size() == s.n);
  CHECK(s.escapes <= s.n);
  CHECK(decode_outcomes(encode_outcomes(s.outcomes)) == s.outcomes);
  CHECK(encode_outcomes(std::vector<std::uint8_t>{0, 0, 1, 1, 1, 0}) == "0:2 1:3 0:1");
  CHECK_THROWS_AS(decode_outcomes("0:2 2:1"), ValidationError);

  std::ostringstream csv;
  write_escape_csv_header(csv);
  write_escape_csv_row(csv, 4, s);
  CHECK(csv.str().rfind("seed,n,H,E_n,ratio\n4,500,12,", 0) == 0);
}

TEST_CASE("budget exhaustion is reported, not thrown") {
  TreeArena a(OffspringDistribution::deterministic(3), 2, 2000);
  const EscapeStats s = escape_count(a, uniform_q(), 100000, 40);
  CHECK(!s.complete);
  CHECK(s.n < 100000);
  CHECK(!s.abort_reason.empty());
}

TEST_CASE("truncation monotonicity") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const std::uint64_t seed = rng();
    const auto xi = OffspringDistribution::parse("p1=1/4,p2=1/4,p3=1/2");
    std::uint64_t prev = ~0ULL;
    for (int H : {4, 6, 8, 12}) {
      TreeArena a(xi, seed);
      const EscapeStats s = escape_count(a, uniform_q(), 300, H);
      CHECK(s.escapes <= prev);
      prev = s.escapes;
    }
  }
}

TEST_CASE("legal sequence: FIFO and LIFO agree") {
  TreeArena base(OffspringDistribution::parse("p1=1/3,p2=1/3,p3=1/3"), 21);
  const auto view = truncate_view(base, 6);
  const std::vector<Placement> place{{TreeArena::root(), 40}};
  TreeArena a = base, b = base;
  const LegalResult ra = run_legal_sequence(a, view.boundary, place, fifo_scheduler(), uniform_q());
  const LegalResult rb = run_legal_sequence(b, view.boundary, place, lifo_scheduler(), uniform_q());
  CHECK(ra.absorbed == rb.absorbed);
  CHECK(ra.at_sink == rb.at_sink);
  CHECK(ra.rotors == rb.rotors);
  CHECK(ra.total_absorbed() + ra.at_sink == 40);
}

TEST_CASE("legal sequence edge cases") {
  TreeArena a(OffspringDistribution::deterministic(2), 1);
  const auto view = truncate_view(a, 2);

  const LegalResult empty = run_legal_sequence(a, view.boundary, {}, fifo_scheduler(), uniform_q());
  CHECK(empty.moves == 0);
  CHECK(empty.total_absorbed() == 0);
  CHECK(empty.at_sink == 0);

  // one particle at a depth-1 vertex whose next rotor position is child 2
  const NodeId x = a.child(0, 1);
  a.set_rotor(x, 1);
  const std::vector<Placement> one{{x, 1}};
  const LegalResult r = run_legal_sequence(a, view.boundary, one, fifo_scheduler(), uniform_q());
  REQUIRE(r.absorbed.size() == 1);
  CHECK(r.absorbed[0].first == a.child(x, 2));
  CHECK(r.absorbed[0].second == 1);
  CHECK(r.moves == 1);

  const std::vector<Placement> root{{TreeArena::root(), 1}};
  const Scheduler bad = [](std::span<const NodeId>) { return NodeId{5}; };
  CHECK_THROWS_AS(run_legal_sequence(a, view.boundary, root, bad, uniform_q()), UsageError);
  const Scheduler to_sink = [](std::span<const NodeId>) { return kSink; };
  CHECK_THROWS_AS(run_legal_sequence(a, view.boundary, root, to_sink, uniform_q()), UsageError);
  CHECK_THROWS_AS(run_legal_sequence(a, {}, root, fifo_scheduler(), uniform_q()), ValidationError);
  const std::vector<NodeId> with_sink{kSink};
  CHECK_THROWS_AS(run_legal_sequence(a, with_sink, root, fifo_scheduler(), uniform_q()), ValidationError);
}

TEST_CASE("sequential walks equal the parallel legal sequence") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    TreeArena base(OffspringDistribution::parse("p1=1/4,p2=1/4,p3=1/4,p4=1/4"), seed);
    const int H = 7;
    const auto view = truncate_view(base, H);
    TreeArena seq = base, par = base;
    const std::uint64_t n = 200;
    const EscapeStats s = escape_count(seq, uniform_q(), n, H);
    const std::vector<Placement> place{{TreeArena::root(), n}};
    const LegalResult r = run_legal_sequence(par, view.boundary, place, random_scheduler(seed), uniform_q());
    CHECK(r.total_absorbed() == s.escapes);
    CHECK(r.at_sink == n - s.escapes);
    CHECK(r.rotors == rotors_of(seq));
  }
}

}  // TEST_SUITE
