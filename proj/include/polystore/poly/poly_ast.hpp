#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace polystore::poly {

/// One `ISLAND( ... )` call. `texts` and `children` alternate:
/// texts[0] children[0] texts[1] ... children[n-1] texts[n], so
/// texts.size() == children.size() + 1 always holds.
struct ScopeNode {
  std::string island;
  std::vector<std::string> texts;
  std::vector<ScopeNode> children;
  std::size_t position = 0;  // byte offset of the island name

  bool operator==(const ScopeNode& o) const {
    return island == o.island && texts == o.texts && children == o.children;
  }
};

struct PolyAst {
  bool training = false;
  std::string prefix;    // whitespace and the `TRAINING:` tag, verbatim
  ScopeNode root;
  std::string trailing;  // whitespace after the root call
};

using IslandPredicate = std::function<bool(std::string_view)>;

/// Parses a polystore query. Nested calls are recognized by a registered
/// island name followed directly by `(`; any other `NAME(` is island text.
/// Single-quoted strings are opaque. Throws ParseError on an unknown
/// outermost island, unbalanced parentheses, an unterminated string, or a
/// `$` outside quotes (reserved for placeholders).
PolyAst parse(std::string_view text, const IslandPredicate& is_island);

/// `ISLAND(` texts and children `)`.
std::string render(const ScopeNode& node);
/// Byte-identical to the parsed input.
std::string reserialize(const PolyAst& ast);

/// Body of a node with every nested scope inlined without its wrapper.
std::string flatten_body(const ScopeNode& node);

/// True when every scope in the subtree has the same island.
bool single_island(const ScopeNode& node);

// Decomposition

/// A maximal single-island subtree, run wholly on one engine.
struct Container {
  std::size_t id = 0;
  std::string island;
  std::string text;   // hole-free body
  ScopeNode subtree;  // as parsed, for substitution
};

/// Reference from a remainder node to what fills one of its holes.
struct Slot {
  bool container = true;
  std::size_t index = 0;

  std::string placeholder() const;  // `$c<i>` or `$r<i>`
  bool operator==(const Slot&) const = default;
};

/// A scope of the remainder: island text whose holes are placeholders.
struct RemainderNode {
  std::size_t id = 0;
  std::string island;
  std::vector<std::string> texts;  // texts.size() == slots.size() + 1
  std::vector<Slot> slots;

  /// Body with placeholders substituted in.
  std::string text() const;
};

/// Nodes in pre-order; nodes[0] is the outermost. Empty when the whole
/// query is one container (the trivial remainder `$c0`).
struct Remainder {
  std::vector<RemainderNode> nodes;

  bool trivial() const { return nodes.empty(); }
  /// Text of the outermost remainder scope, or "$c0".
  std::string text() const;
};

struct Decomposition {
  std::vector<Container> containers;
  Remainder remainder;
};

/// Containers are numbered in pre-order, left to right.
Decomposition decompose(const ScopeNode& root);
Decomposition decompose(const PolyAst& ast);

/// Rebuilds the scope tree by putting container subtrees back into the
/// remainder; equals the tree that was decomposed.
ScopeNode substitute(const Decomposition& d);

/// Extracts `$c<i>`/`$r<i>` placeholders in order of appearance, with byte
/// offsets. Placeholders inside single quotes are ignored.
struct PlaceholderRef {
  Slot slot;
  std::size_t position;
  std::size_t length;
};
std::vector<PlaceholderRef> find_placeholders(std::string_view text);

}  // namespace polystore::poly
