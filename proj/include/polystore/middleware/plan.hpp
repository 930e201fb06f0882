#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "polystore/island/cast.hpp"
#include "polystore/island/registry.hpp"
#include "polystore/poly/poly_ast.hpp"

namespace polystore::island {
class Polystore;
}

namespace polystore::mw {

using island::Engine;

enum class StepKind { execute_container, migrate, combine };

/// One plan step. `node` names a container (`c0`), a remainder node (`r0`),
/// or, for a migration with `base` set, a stored object the engine lacks.
struct PlanStep {
  StepKind kind = StepKind::execute_container;
  std::string node;
  Engine engine = Engine::relational;  // execute_container, combine
  Engine from = Engine::relational;    // migrate
  Engine to = Engine::relational;      // migrate
  bool base = false;
  island::CastSpec spec;               // migrate

  std::string describe() const;
};

struct QueryPlan {
  std::string id;                        // e.g. "c0@relational|r0@array"
  std::map<std::string, Engine> assignment;
  std::vector<PlanStep> steps;
};

std::string node_id(const poly::Slot& slot);

/// Cartesian product of per-node engine candidates in deterministic order,
/// with the implied migrations. Throws Errc::no_viable_engine when some
/// node has no candidate. Truncates to `cap` plans with a warning.
std::vector<QueryPlan> enumerate_plans(const poly::Decomposition& d, const island::Polystore& ps,
                                       std::size_t cap = 64);

/// Engine candidates of one node after shim pruning.
std::vector<Engine> candidates(const std::string& island, const std::string& text, const island::Polystore& ps);

/// Throws Errc::plan_invariant when a step consumes something not yet
/// produced, or the plan does not end with the outermost node.
void validate_plan(const QueryPlan& plan, const poly::Decomposition& d);

nlohmann::json to_json(const QueryPlan& plan);
QueryPlan plan_from_json(const nlohmann::json& j);

}  // namespace polystore::mw
