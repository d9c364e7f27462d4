#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adsorbrl/elements.hpp"

namespace adsorbrl {

/// A catalyst as an unordered set of one to three elements. Stoichiometry is
/// not represented. Elements are kept sorted by atomic number, which is also
/// the slot order used by the remove-first/second/third actions.
class Composition {
 public:
  static constexpr std::size_t kMaxElements = 3;

  /// Throws DomainError unless 1..3 distinct valid atomic numbers are given.
  Composition(std::initializer_list<AtomicNumber> elements);
  explicit Composition(std::span<const AtomicNumber> elements);

  std::size_t size() const { return size_; }
  std::span<const AtomicNumber> elements() const { return {elements_.data(), size_}; }
  AtomicNumber operator[](std::size_t slot) const { return elements_[slot]; }
  bool contains(AtomicNumber z) const;

  /// Composition with `z` added; nullopt when full or `z` is already present.
  std::optional<Composition> with(AtomicNumber z) const;
  /// Composition with the element in `slot` removed; nullopt when the slot is
  /// empty or removal would leave no element.
  std::optional<Composition> without_slot(std::size_t slot) const;

  /// Multi-hot vector over `vocab`; throws DomainError for elements outside it.
  std::vector<double> encode(const Vocabulary& vocab) const;

  /// Symbols sorted alphabetically and joined by '-', e.g. "C-Si".
  std::string key(const ElementRegistry& reg = ElementRegistry::builtin()) const;
  static Composition from_key(std::string_view key,
                              const ElementRegistry& reg = ElementRegistry::builtin());

  friend auto operator<=>(const Composition&, const Composition&) = default;
  friend bool operator==(const Composition&, const Composition&) = default;

 private:
  std::array<AtomicNumber, kMaxElements> elements_{};  // zero-padded
  std::size_t size_ = 0;
};

enum class Adsorbate { CH2 = 0, CH4, N2, NH3, OH2, OH };
inline constexpr std::size_t kAdsorbateCount = 6;
inline constexpr std::array<Adsorbate, kAdsorbateCount> kAdsorbates = {
    Adsorbate::CH2, Adsorbate::CH4, Adsorbate::N2, Adsorbate::NH3, Adsorbate::OH2, Adsorbate::OH};

/// 1-based objective index (CH2 = 1 ... OH = 6).
inline int objective_index(Adsorbate a) { return static_cast<int>(a) + 1; }
Adsorbate adsorbate_from_index(int objective_index);
std::string_view to_string(Adsorbate a);
/// Accepts "OH2", "*OH2", "oh2" and the like. Returns nullopt for unknown names.
std::optional<Adsorbate> parse_adsorbate(std::string_view name);

struct EnergyRecord {
  Composition composition;
  Adsorbate adsorbate;
  double energy_ev;
};

struct LoadResult {
  std::vector<EnergyRecord> records;
  std::size_t rejected_too_many_elements = 0;
  std::size_t rejected_unknown_element = 0;
  std::vector<std::string> diagnostics;  // one entry per rejected row

  std::size_t rejected() const { return rejected_too_many_elements + rejected_unknown_element; }
};

/// Distinct element symbols of a formula such as "Fe2O3" or "Ca(OH)2".
/// Throws DomainError on characters that cannot start an element symbol.
std::vector<std::string> formula_symbols(std::string_view formula);

/// Reads a `formula,adsorbate,energy_ev[,...]` CSV. Rows naming more than three
/// elements, unknown elements, or elements outside `vocab` (when given) are
/// counted and skipped. Malformed rows throw DataError with the line number.
LoadResult load_raw(std::istream& in, const std::optional<Vocabulary>& vocab = std::nullopt,
                    const ElementRegistry& reg = ElementRegistry::builtin());
LoadResult load_raw(const std::string& path, const std::optional<Vocabulary>& vocab = std::nullopt,
                    const ElementRegistry& reg = ElementRegistry::builtin());

using AdsorbateEnergies = std::array<std::optional<double>, kAdsorbateCount>;

/// Lowest adsorption energy per (composition, adsorbate). Immutable.
class EnergyTable {
 public:
  EnergyTable() = default;

  /// Keeps the minimum energy per key; comparisons are exact.
  static EnergyTable reduce_min_energy(std::span<const EnergyRecord> records);

  std::optional<double> energy(const Composition& c, Adsorbate a) const;
  /// Null when the composition has no known energy at all.
  const AdsorbateEnergies* energies(const Composition& c) const;
  bool contains(const Composition& c) const { return entries_.contains(c); }

  std::size_t count(Adsorbate a) const { return counts_[static_cast<std::size_t>(a)]; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<Composition, AdsorbateEnergies>& entries() const { return entries_; }

  /// Union of all elements appearing in any composition.
  Vocabulary vocabulary() const;
  /// Composition with the lowest energy for `a` (ties: smallest composition).
  std::optional<Composition> argmin(Adsorbate a) const;

  std::vector<EnergyRecord> records() const;

  /// Deterministic sorted CSV: `elements,adsorbate,energy_ev`.
  void write_csv(std::ostream& out, const ElementRegistry& reg = ElementRegistry::builtin()) const;
  static EnergyTable read_csv(std::istream& in,
                              const ElementRegistry& reg = ElementRegistry::builtin());

  friend bool operator==(const EnergyTable&, const EnergyTable&) = default;

 private:
  std::map<Composition, AdsorbateEnergies> entries_;
  std::array<std::size_t, kAdsorbateCount> counts_{};
};

/// Reads either a raw export (header starts with `formula`) or a serialized
/// table (header starts with `elements`) and returns the reduced table.
EnergyTable load_table(const std::string& path, LoadResult* raw_diagnostics = nullptr);

/// Sorted set of compositions with O(log n) membership.
class CompositionSet {
 public:
  CompositionSet() = default;
  explicit CompositionSet(std::vector<Composition> items);

  bool contains(const Composition& c) const;
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Composition& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::vector<Composition> items_;
};

/// Compositions with a known energy for at least one of `targets`.
/// Throws DomainError when `targets` is empty.
CompositionSet known_subgraph(const EnergyTable& table, std::span<const Adsorbate> targets);

/// Every composition one add or remove step away from `c` within the full
/// space over `vocab` (remove never produces the empty set).
std::vector<Composition> composition_neighbors(const Composition& c, const Vocabulary& vocab);

struct EgoGraph {
  struct Node {
    Composition composition;
    int hop;
  };
  struct Edge {
    Composition a;
    Composition b;
    int hop;  // larger hop of the two endpoints
  };
  std::vector<Node> nodes;  // BFS order
  std::vector<Edge> edges;
};

/// Breadth-first neighbourhood of `center` over compositions in `table`,
/// adjacency being a single element added or removed.
EgoGraph ego_graph(const EnergyTable& table, const Composition& center, int hops);

/// Writes `# node<TAB>hop` comment lines followed by `node_a<TAB>node_b<TAB>hop`.
void export_ego_graph(const EgoGraph& graph, std::ostream& out,
                      const ElementRegistry& reg = ElementRegistry::builtin());

}  // namespace adsorbrl
