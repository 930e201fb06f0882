#include "polystore/common/error.hpp"

namespace polystore {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::duplicate_name: return "duplicate-name";
    case Errc::schema_invariant: return "schema-invariant";
    case Errc::arity_mismatch: return "arity-mismatch";
    case Errc::bad_literal: return "bad-literal";
    case Errc::parse: return "parse";
    case Errc::unknown_object: return "unknown-object";
    case Errc::unknown_column: return "unknown-column";
    case Errc::length_mismatch: return "length-mismatch";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::unknown_island: return "unknown-island";
    case Errc::untranslatable: return "untranslatable";
    case Errc::density: return "density";
    case Errc::type_incoercible: return "type-incoercible";
    case Errc::duplicate_dimension: return "duplicate-dimension";
    case Errc::no_viable_engine: return "no-viable-engine";
    case Errc::plan_invariant: return "plan-invariant";
    case Errc::plan_divergence: return "plan-divergence";
    case Errc::execution: return "execution";
    case Errc::io: return "io";
  }
  return "unknown";
}

}  // namespace polystore
