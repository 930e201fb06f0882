#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "gen.hpp"
#include "polystore/common/error.hpp"
#include "polystore/middleware/executor.hpp"
#include "polystore/middleware/middleware.hpp"
#include "polystore/middleware/monitor.hpp"
#include "polystore/middleware/plan.hpp"
#include "polystore/middleware/signature.hpp"
#include "polystore/poly/poly_ast.hpp"

using namespace polystore;
using island::Engine;

namespace {

const char* kExample = "ARRAY(multiply(RELATIONAL(select * from A),B))";

poly::Decomposition decompose_text(const std::string& q) {
  return poly::decompose(poly::parse(q, island::is_island));
}

/// A as a dense cell relation (i, j, v), B as a 2-D array.
void load_example(island::Polystore& ps, std::size_t n, testsupport::Rng& rng) {
  ps.relational().store(testsupport::dense_cells("A", n, n, rng));
  ps.store_array(array::DenseArray("B", {{"i", n}, {"j", n}}, testsupport::random_values(rng, n * n)), Engine::array);
}

mw::MonitorRecord record(const std::string& plan, double ms, std::vector<mw::Constant> constants = {},
                         std::uint64_t seq = 0) {
  mw::MonitorRecord r;
  r.signature.structure = "00000000000000aa";
  r.signature.objects = {"T"};
  r.signature.constants = std::move(constants);
  r.plan_id = plan;
  r.elapsed_ms = ms;
  r.seq = seq;
  r.phase = "training";
  return r;
}

}  // namespace

TEST_CASE("example query enumerates one relational container times two host engines") {
  island::Polystore ps;
  testsupport::Rng rng(1);
  load_example(ps, 3, rng);
  const auto d = decompose_text(kExample);
  const auto plans = mw::enumerate_plans(d, ps);
  REQUIRE(plans.size() == 2);
  CHECK(plans[0].id == "c0@relational|r0@array");
  CHECK(plans[1].id == "c0@relational|r0@relational");
  for (const auto& p : plans) CHECK_NOTHROW(mw::validate_plan(p, d));
}

TEST_CASE("single-island query has one plan") {
  island::Polystore ps;
  ps.relational().create_table("T", {{"a", ColumnType::int64}});
  const auto plans = mw::enumerate_plans(decompose_text("RELATIONAL(select count(*) from T)"), ps);
  CHECK(plans.size() == 1);
}

TEST_CASE("an operator with no relational form prunes that engine") {
  island::Polystore ps;
  ps.store_array(array::DenseArray("X", {{"i", 4}}, {1, 2, 3, 4}), Engine::array);
  const auto plans = mw::enumerate_plans(decompose_text("ARRAY(dwt_haar(X))"), ps);
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].id == "c0@array");
}

TEST_CASE("plan cap truncates deterministically") {
  island::Polystore ps;
  testsupport::Rng rng(2);
  testsupport::load_cross_fixture(ps, rng);
  const auto d = decompose_text("ARRAY(multiply(ARRAY(multiply(A, RELATIONAL(select * from R))), ARRAY(multiply(C, B))))");
  const auto all = mw::enumerate_plans(d, ps);
  const auto capped = mw::enumerate_plans(d, ps, 3);
  REQUIRE(capped.size() == std::min<std::size_t>(3, all.size()));
  for (std::size_t i = 0; i < capped.size(); ++i) CHECK(capped[i].id == all[i].id);
}

TEST_CASE("executor: example plan equals the dense matmul oracle") {
  island::Polystore ps;
  testsupport::Rng rng(3);
  const std::size_t n = 4;
  load_example(ps, n, rng);
  const auto a = ps.relational().snapshot("A");
  std::vector<double> av(n * n);
  for (std::size_t r = 0; r < a.size(); ++r) {
    const auto i = static_cast<std::size_t>(std::get<std::int64_t>(a.at(r, 0)));
    const auto j = static_cast<std::size_t>(std::get<std::int64_t>(a.at(r, 1)));
    av[i * n + j] = std::get<double>(a.at(r, 2));
  }
  const auto& bv = ps.arrays().get("B")->values();
  std::vector<double> want(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) want[i * n + j] += av[i * n + k] * bv[k * n + j];

  const auto d = decompose_text(kExample);
  for (const auto& plan : mw::enumerate_plans(d, ps)) {
    const auto ex = mw::execute_plan(ps, d, plan);
    const auto& got = std::get<array::DenseArray>(ex.result).values();
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    double steps = 0;
    for (const auto& s : ex.steps) steps += s.ms;
    CHECK(steps <= ex.total_ms + 0.05);
  }
  // Temps are gone: only the user's objects remain.
  CHECK(ps.relational().table_names() == std::vector<std::string>{"A"});
  CHECK(ps.arrays().names() == std::vector<std::string>{"B"});
}

TEST_CASE("plan with combine before its migration is rejected") {
  island::Polystore ps;
  testsupport::Rng rng(4);
  load_example(ps, 2, rng);
  const auto d = decompose_text(kExample);
  auto plan = mw::enumerate_plans(d, ps).at(0);
  auto combine = std::find_if(plan.steps.begin(), plan.steps.end(),
                              [](const mw::PlanStep& s) { return s.kind == mw::StepKind::combine; });
  std::rotate(plan.steps.begin(), combine, combine + 1);
  try {
    mw::validate_plan(plan, d);
    FAIL("expected plan_invariant");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::plan_invariant);
  }
}

TEST_CASE("plans round-trip through JSON") {
  island::Polystore ps;
  testsupport::Rng rng(5);
  load_example(ps, 2, rng);
  const auto d = decompose_text(kExample);
  for (const auto& p : mw::enumerate_plans(d, ps)) {
    const auto back = mw::plan_from_json(mw::to_json(p));
    CHECK(back.id == p.id);
    CHECK(mw::to_json(back) == mw::to_json(p));
  }
}

TEST_CASE("signatures: literals, objects, container numbering") {
  island::Polystore ps;
  ps.relational().create_table("T", {{"a", ColumnType::int64}});
  ps.relational().create_table("U", {{"a", ColumnType::int64}});
  auto sig = [&](const std::string& q) { return mw::signature_of(decompose_text(q), ps); };

  const auto s5 = sig("RELATIONAL(select a from T where a > 5)");
  const auto s7 = sig("RELATIONAL(select a from T where a > 7)");
  CHECK(s5.structure == s7.structure);
  CHECK(s5.objects == s7.objects);
  REQUIRE(s5.constants.size() == 1);
  CHECK(s5.constants[0] == mw::Constant{true, "5"});
  CHECK(s7.constants[0] == mw::Constant{true, "7"});
  CHECK(sig("RELATIONAL(select a from T where a > 5)") == s5);

  const auto su = sig("RELATIONAL(select a from U where a > 5)");
  CHECK(su.structure == s5.structure);
  CHECK(su.objects == std::vector<std::string>{"U"});
  CHECK(s5.objects == std::vector<std::string>{"T"});

  CHECK(sig("RELATIONAL(select a from T where a = 'x')").structure != s5.structure);

  // Swapping container ids (and the placeholders naming them) is invisible.
  island::Polystore fx;
  testsupport::Rng rng(6);
  testsupport::load_cross_fixture(fx, rng);
  const auto d = decompose_text(
      "RELATIONAL(select a.d1 AS i, SUM(a.val) AS s from ARRAY(A) a join ARRAY(multiply(C, B)) b on a.d2 = b.d1 group by a.d1)");
  REQUIRE(d.containers.size() == 2);
  auto swapped = d;
  std::swap(swapped.containers[0], swapped.containers[1]);
  swapped.containers[0].id = 0;
  swapped.containers[1].id = 1;
  for (auto& node : swapped.remainder.nodes) {
    for (auto& slot : node.slots) {
      if (slot.container) slot.index = 1 - slot.index;
    }
  }
  CHECK(mw::signature_of(swapped, fx) == mw::signature_of(d, fx));
}

TEST_CASE("signature JSON round trip") {
  island::Polystore ps;
  ps.relational().create_table("T", {{"a", ColumnType::int64}, {"b", ColumnType::text}});
  const auto s = mw::signature_of(decompose_text("RELATIONAL(select a from T where b = 'x' and a < 3.5)"), ps);
  CHECK(mw::signature_from_json(mw::to_json(s)) == s);
}

TEST_CASE("constant distance: normalized L1 and Hamming") {
  using C = mw::Constant;
  CHECK(mw::constant_distance({}, {}) == 0.0);
  CHECK(mw::constant_distance({C{true, "5"}}, {C{true, "5"}}) == 0.0);
  CHECK(mw::constant_distance({C{true, "5"}}, {C{true, "4"}}) < mw::constant_distance({C{true, "5"}}, {C{true, "90"}}));
  CHECK(mw::constant_distance({C{false, "x"}}, {C{false, "y"}}) == 1.0);
  CHECK(std::isinf(mw::constant_distance({C{true, "1"}}, {C{true, "1"}, C{true, "2"}})));
  CHECK(mw::constant_distance({C{true, "3"}}, {C{true, "8"}}) == mw::constant_distance({C{true, "8"}}, {C{true, "3"}}));
}

TEST_CASE("usage divergence") {
  mw::UsageSnapshot a{1, 1000, 2000, 0, 3.0};
  CHECK(mw::usage_divergence(a, a) == 0.0);
  auto b = a;
  b.active_queries = 2;
  // |2-1|/(2+1); every other field contributes 0.
  CHECK(mw::usage_divergence(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  mw::UsageSnapshot c{0, 10, 0, 77, 9.5};
  CHECK(mw::usage_divergence(a, c) == mw::usage_divergence(c, a));
  CHECK(mw::usage_divergence(a, c) > 0.0);
  CHECK(mw::usage_divergence(a, c) <= 5.0);
}

TEST_CASE("monitor lookup: argmin, nearest constants, recency, staleness") {
  mw::MonitorStore store;
  mw::Signature sig;
  sig.structure = "00000000000000aa";
  sig.objects = {"T"};
  CHECK_FALSE(store.lookup(sig, {}, 0.5).has_value());

  store.append(record("P1", 10));
  store.append(record("P2", 25));
  auto hit = store.lookup(sig, {}, 0.5);
  REQUIRE(hit);
  CHECK(hit->plan_id == "P1");
  store.append(record("P2", 4));
  CHECK(store.lookup(sig, {}, 0.5)->plan_id == "P2");

  // Errored runs never win.
  auto bad = record("P3", 0.001);
  bad.error = "boom";
  store.append(bad);
  CHECK(store.lookup(sig, {}, 0.5)->plan_id == "P2");

  // Different objects: no match.
  auto other = sig;
  other.objects = {"U"};
  CHECK_FALSE(store.lookup(other, {}, 0.5).has_value());

  mw::MonitorStore near;
  near.append(record("at4", 50, {{true, "4"}}));
  near.append(record("at90", 1, {{true, "90"}}));
  auto q = sig;
  q.constants = {{true, "5"}};
  CHECK(near.lookup(q, {}, 0.5)->plan_id == "at4");

  // Equal distance: the most recent constants win.
  mw::MonitorStore tie;
  tie.append(record("old", 1, {{true, "4"}}));
  tie.append(record("new", 9, {{true, "6"}}));
  CHECK(tie.lookup(q, {}, 0.5)->plan_id == "new");

  // Staleness past the threshold; the choice is still returned.
  mw::MonitorStore st;
  auto r = record("P", 1);
  r.usage = {1, 100, 100, 0, 1};
  st.append(r);
  const auto fresh = st.lookup(sig, {1, 100, 100, 0, 1}, 0.5);
  CHECK_FALSE(fresh->stale);
  const auto stale = st.lookup(sig, {4, 1000, 100, 0, 20}, 0.5);
  REQUIRE(stale);
  CHECK(stale->plan_id == "P");
  CHECK(stale->stale);
  CHECK(stale->divergence > 0.5);
}

TEST_CASE("monitor store persists JSON lines with a version field") {
  const auto path = std::filesystem::temp_directory_path() / "polystore_monitor_test.jsonl";
  std::filesystem::remove(path);
  {
    mw::MonitorStore s(path.string());
    s.append(record("P1", 3));
    s.append(record("P2", 2));
  }
  mw::MonitorStore again(path.string());
  REQUIRE(again.size() == 2);
  const auto recs = again.records();
  CHECK(recs[1].plan_id == "P2");
  CHECK(recs[0].v == mw::kMonitorRecordVersion);
  CHECK(mw::to_json(recs[0]).at("v") == 1);
  CHECK(mw::to_json(mw::record_from_json(mw::to_json(recs[1]))) == mw::to_json(recs[1]));
  std::filesystem::remove(path);
}

TEST_CASE("training runs every plan, records each, and agrees across plans") {
  island::Polystore ps;
  testsupport::Rng rng(7);
  load_example(ps, 4, rng);
  mw::MonitorStore store;
  mw::Config cfg;
  cfg.seed = 1;
  mw::Middleware m(ps, store, cfg);
  const auto rep = m.run(std::string("TRAINING: ") + kExample);
  CHECK(rep.phase == "training");
  CHECK(rep.runs.size() == 2);
  CHECK(store.size() == 2);
  // The fastest plan is the one reported.
  const auto best = std::min_element(rep.runs.begin(), rep.runs.end(),
                                     [](const auto& a, const auto& b) { return a.elapsed_ms < b.elapsed_ms; });
  CHECK(rep.chosen_plan == best->plan_id);

  // Retraining appends; lookup takes the argmin over all four records.
  m.run_training(kExample);
  CHECK(store.size() == 4);
  const auto recs = store.records();
  const auto argmin = std::min_element(recs.begin(), recs.end(),
                                       [](const auto& a, const auto& b) { return a.elapsed_ms < b.elapsed_ms; });
  const auto prod = m.run_production(kExample);
  CHECK(prod.monitor_hit);
  CHECK(prod.chosen_plan == argmin->plan_id);
}

TEST_CASE("production miss: seeded choice, queue, idle drain") {
  auto run_once = [](std::uint64_t seed) {
    island::Polystore ps;
    testsupport::Rng rng(8);
    load_example(ps, 4, rng);
    mw::MonitorStore store;
    mw::Config cfg;
    cfg.seed = seed;
    mw::Middleware m(ps, store, cfg);
    const auto rep = m.run(kExample);
    CHECK_FALSE(rep.monitor_hit);
    CHECK(rep.queued == 1);
    CHECK(m.queue_length() == 1);
    CHECK(store.size() == 1);
    CHECK(m.run_idle(0) == 0);
    CHECK(m.run_idle() == 1);
    CHECK(m.run_idle() == 0);
    CHECK(store.size() == 2);
    const auto recs = store.records();
    CHECK(recs[1].background);
    CHECK(recs[0].plan_id != recs[1].plan_id);
    return rep.chosen_plan;
  };
  CHECK(run_once(11) == run_once(11));
  std::set<std::string> seen;
  for (std::uint64_t s = 0; s < 16; ++s) seen.insert(run_once(s));
  CHECK(seen.size() == 2);  // both plans reachable
}

TEST_CASE("production miss with on_miss=train trains instead") {
  island::Polystore ps;
  testsupport::Rng rng(9);
  load_example(ps, 3, rng);
  mw::MonitorStore store;
  mw::Config cfg;
  cfg.on_miss = mw::OnMiss::train;
  cfg.seed = 1;
  mw::Middleware m(ps, store, cfg);
  const auto rep = m.run(kExample);
  CHECK(rep.phase == "training");
  CHECK(store.size() == 2);
  CHECK(m.queue_length() == 0);
}

TEST_CASE("stale match still executes and recommends retraining") {
  island::Polystore ps;
  testsupport::Rng rng(10);
  load_example(ps, 3, rng);
  mw::MonitorStore store;
  mw::Config cfg;
  cfg.seed = 1;
  mw::Middleware m(ps, store, cfg);
  m.run_training(kExample);
  // Load a much larger object: the resident-bytes fields now differ widely.
  ps.store_array(array::DenseArray("big", {{"i", 100000}}, std::vector<double>(100000, 1.0)), Engine::array);
  ps.relational().store(testsupport::dense_cells("bigrel", 100, 100, rng));
  const auto rep = m.run_production(kExample);
  CHECK(rep.monitor_hit);
  CHECK(rep.stale);
  CHECK(rep.divergence > 0.5);
  CHECK(std::holds_alternative<array::DenseArray>(rep.result));
}

TEST_CASE("failing plans: production propagates with plan context, idle records and continues") {
  island::Polystore ps;
  ps.relational().store(testsupport::dense_cells("A", 2, 2, *std::make_unique<testsupport::Rng>(1)));
  ps.store_array(array::DenseArray("B", {{"i", 3}, {"j", 3}}, std::vector<double>(9, 1.0)), Engine::array);
  mw::MonitorStore store;
  mw::Config cfg;
  cfg.seed = 1;
  mw::Middleware m(ps, store, cfg);
  try {
    m.run(kExample);  // 2x2 times 3x3
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("plan ") != std::string::npos);
  }
}

TEST_CASE("plan equivalence over generated cross-island queries") {
  testsupport::Rng rng(2024);
  island::Polystore ps;
  testsupport::load_cross_fixture(ps, rng);
  const auto baseline_tables = ps.relational().table_names();
  const auto baseline_arrays = ps.arrays().names();
  std::size_t multi = 0;
  for (int i = 0; i < 60; ++i) {
    const auto q = testsupport::random_cross_query(rng);
    CAPTURE(q);
    const auto d = decompose_text(q);
    const auto plans = mw::enumerate_plans(d, ps);
    if (plans.size() > 1) ++multi;
    const auto first = mw::execute_plan(ps, d, plans[0]);
    for (std::size_t p = 1; p < plans.size(); ++p) {
      CAPTURE(plans[p].id);
      std::string why;
      const auto other = mw::execute_plan(ps, d, plans[p]);
      CHECK_MESSAGE(island::canonical_equal(first.result, other.result, &why), why);
    }
  }
  CHECK(multi > 20);
  // Plans clean up after themselves.
  CHECK(ps.relational().table_names() == baseline_tables);
  CHECK(ps.arrays().names() == baseline_arrays);
}
