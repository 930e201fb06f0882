#include "polystore/middleware/plan.hpp"

#include <set>

#include <spdlog/spdlog.h>

#include "polystore/common/error.hpp"
#include "polystore/island/polystore.hpp"

namespace polystore::mw {

namespace {

std::string_view kind_name(StepKind k) {
  switch (k) {
    case StepKind::execute_container: return "execute";
    case StepKind::migrate: return "migrate";
    case StepKind::combine: return "combine";
  }
  return "?";
}

StepKind parse_kind(std::string_view s) {
  for (auto k : {StepKind::execute_container, StepKind::migrate, StepKind::combine}) {
    if (kind_name(k) == s) return k;
  }
  throw Error(Errc::invalid_argument, "unknown step kind '" + std::string(s) + "'");
}

struct Builder {
  const poly::Decomposition& d;
  const island::Polystore& ps;
  const std::map<std::string, Engine>& assignment;
  QueryPlan plan;
  std::set<std::pair<std::string, Engine>> migrated;

  // Stored ARRAY objects the chosen engine does not hold yet.
  void base_migrations(const std::string& island_name, const std::string& text, Engine engine) {
    const auto& isl = island::find_island(island_name);
    if (isl.model != island::DataModel::array) return;
    for (const auto& obj : ps.referenced_objects(text, island_name)) {
      if (ps.resident(obj, isl.model, engine) || migrated.count({obj, engine})) continue;
      const auto where = ps.locate(obj, isl.model);
      if (where.empty()) continue;  // fails at execution as an unknown object
      PlanStep s;
      s.kind = StepKind::migrate;
      s.node = obj;
      s.base = true;
      s.from = where.front();
      s.to = engine;
      s.spec.source = island::DataModel::array;
      s.spec.target = island::DataModel::array;
      plan.steps.push_back(std::move(s));
      migrated.insert({obj, engine});
    }
  }

  void emit(const poly::Slot& slot) {
    const auto id = node_id(slot);
    const auto engine = assignment.at(id);
    if (slot.container) {
      const auto& c = d.containers[slot.index];
      base_migrations(c.island, c.text, engine);
      PlanStep s;
      s.kind = StepKind::execute_container;
      s.node = id;
      s.engine = engine;
      plan.steps.push_back(std::move(s));
      return;
    }
    const auto& r = d.remainder.nodes[slot.index];
    const auto model = island::find_island(r.island).model;
    for (const auto& child : r.slots) {
      emit(child);
      PlanStep m;
      m.kind = StepKind::migrate;
      m.node = node_id(child);
      m.from = assignment.at(m.node);
      m.to = engine;
      m.spec.source = child.container ? island::find_island(d.containers[child.index].island).model
                                      : island::find_island(d.remainder.nodes[child.index].island).model;
      m.spec.target = model;
      plan.steps.push_back(std::move(m));
    }
    base_migrations(r.island, r.text(), engine);
    PlanStep s;
    s.kind = StepKind::combine;
    s.node = id;
    s.engine = engine;
    plan.steps.push_back(std::move(s));
  }
};

poly::Slot root_slot(const poly::Decomposition& d) {
  return d.remainder.trivial() ? poly::Slot{true, 0} : poly::Slot{false, 0};
}

}  // namespace

std::string PlanStep::describe() const {
  switch (kind) {
    case StepKind::execute_container:
      return "execute " + node + " on " + std::string(island::engine_name(engine));
    case StepKind::migrate:
      return "migrate " + node + " " + std::string(island::engine_name(from)) + "->" +
             std::string(island::engine_name(to));
    case StepKind::combine:
      return "combine " + node + " on " + std::string(island::engine_name(engine));
  }
  return "?";
}

std::string node_id(const poly::Slot& slot) {
  return (slot.container ? "c" : "r") + std::to_string(slot.index);
}

std::vector<Engine> candidates(const std::string& island_name, const std::string& text, const island::Polystore& ps) {
  std::vector<Engine> out;
  for (auto e : island::find_island(island_name).engines) {
    if (ps.supports(island_name, e, text)) out.push_back(e);
  }
  return out;
}

std::vector<QueryPlan> enumerate_plans(const poly::Decomposition& d, const island::Polystore& ps, std::size_t cap) {
  std::vector<std::string> ids;
  std::vector<std::vector<Engine>> options;
  for (const auto& c : d.containers) {
    ids.push_back(node_id({true, c.id}));
    options.push_back(candidates(c.island, c.text, ps));
  }
  for (const auto& r : d.remainder.nodes) {
    ids.push_back(node_id({false, r.id}));
    options.push_back(candidates(r.island, r.text(), ps));
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (options[i].empty()) {
      throw Error(Errc::no_viable_engine, "no engine can run " + ids[i]);
    }
  }
  std::vector<QueryPlan> plans;
  std::vector<std::size_t> pick(ids.size(), 0);
  for (;;) {
    if (plans.size() == cap) {
      spdlog::warn("plan space truncated to {} plans", cap);
      break;
    }
    std::map<std::string, Engine> assignment;
    std::string id;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      assignment[ids[i]] = options[i][pick[i]];
      id += (i ? "|" : "") + ids[i] + "@" + std::string(island::engine_name(options[i][pick[i]]));
    }
    Builder b{d, ps, assignment, {}, {}};
    b.plan.id = id;
    b.plan.assignment = assignment;
    b.emit(root_slot(d));
    plans.push_back(std::move(b.plan));
    // Odometer, last node fastest.
    std::size_t i = ids.size();
    while (i > 0) {
      --i;
      if (++pick[i] < options[i].size()) break;
      pick[i] = 0;
      if (i == 0) return plans;
    }
    if (ids.empty()) break;
  }
  return plans;
}

void validate_plan(const QueryPlan& plan, const poly::Decomposition& d) {
  // (node, engine) pairs produced, and (node, engine) pairs staged for a consumer.
  std::set<std::pair<std::string, Engine>> produced;
  std::set<std::pair<std::string, Engine>> staged;
  auto fail = [&](std::size_t i, const std::string& why) {
    throw Error(Errc::plan_invariant, "plan " + plan.id + " step " + std::to_string(i) + " (" +
                                          plan.steps[i].describe() + "): " + why);
  };
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& s = plan.steps[i];
    switch (s.kind) {
      case StepKind::execute_container:
        produced.insert({s.node, s.engine});
        break;
      case StepKind::migrate:
        if (!s.base && !produced.count({s.node, s.from})) fail(i, s.node + " not produced yet");
        if (!s.base) staged.insert({s.node, s.to});
        break;
      case StepKind::combine: {
        if (s.node.empty() || s.node[0] != 'r') fail(i, "only remainder nodes combine");
        const auto idx = std::stoul(s.node.substr(1));
        if (idx >= d.remainder.nodes.size()) fail(i, "no such remainder node");
        for (const auto& slot : d.remainder.nodes[idx].slots) {
          if (!staged.count({node_id(slot), s.engine})) fail(i, node_id(slot) + " not migrated in before use");
        }
        produced.insert({s.node, s.engine});
        break;
      }
    }
  }
  if (plan.steps.empty()) throw Error(Errc::plan_invariant, "plan " + plan.id + " is empty");
  const auto root = node_id(root_slot(d));
  if (plan.steps.back().node != root || plan.steps.back().kind == StepKind::migrate) {
    throw Error(Errc::plan_invariant, "plan " + plan.id + " does not end by producing " + root);
  }
}

nlohmann::json to_json(const QueryPlan& plan) {
  auto steps = nlohmann::json::array();
  for (const auto& s : plan.steps) {
    nlohmann::json j = {{"kind", kind_name(s.kind)}, {"node", s.node}};
    if (s.kind == StepKind::migrate) {
      j["from"] = island::engine_name(s.from);
      j["to"] = island::engine_name(s.to);
      j["base"] = s.base;
      j["cast"] = island::to_json(s.spec);
    } else {
      j["engine"] = island::engine_name(s.engine);
    }
    steps.push_back(std::move(j));
  }
  nlohmann::json assignment = nlohmann::json::object();
  for (const auto& [k, v] : plan.assignment) assignment[k] = island::engine_name(v);
  return {{"id", plan.id}, {"assignment", assignment}, {"steps", steps}};
}

QueryPlan plan_from_json(const nlohmann::json& j) {
  QueryPlan p;
  p.id = j.at("id").get<std::string>();
  for (const auto& [k, v] : j.at("assignment").items()) p.assignment[k] = island::parse_engine(v.get<std::string>());
  for (const auto& js : j.at("steps")) {
    PlanStep s;
    s.kind = parse_kind(js.at("kind").get<std::string>());
    s.node = js.at("node").get<std::string>();
    if (s.kind == StepKind::migrate) {
      s.from = island::parse_engine(js.at("from").get<std::string>());
      s.to = island::parse_engine(js.at("to").get<std::string>());
      s.base = js.value("base", false);
      s.spec = island::cast_spec_from_json(js.at("cast"));
    } else {
      s.engine = island::parse_engine(js.at("engine").get<std::string>());
    }
    p.steps.push_back(std::move(s));
  }
  return p;
}

}  // namespace polystore::mw
