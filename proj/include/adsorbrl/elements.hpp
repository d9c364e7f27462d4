#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adsorbrl {

using AtomicNumber = int;

inline constexpr AtomicNumber kMaxAtomicNumber = 86;
inline constexpr int kGridRows = 7;
inline constexpr int kGridCols = 32;

struct GridPos {
  int row = 0;  // 1-based
  int col = 0;  // 1-based
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

struct Element {
  AtomicNumber z = 0;
  std::string symbol;
  GridPos pos;
};

enum class Direction { Stay = 0, Left, Right, Up, Down };
inline constexpr std::size_t kDirectionCount = 5;
inline constexpr std::array<Direction, kDirectionCount> kDirections = {
    Direction::Stay, Direction::Left, Direction::Right, Direction::Up, Direction::Down};

Direction inverse(Direction d);
std::string_view to_string(Direction d);

/// Elements H..Rn laid out on the 32-column long-form periodic table.
///
/// Lanthanides sit inline in row 6, so every cell is reachable by grid moves.
/// Immutable once built.
class ElementRegistry {
 public:
  /// The compiled-in copy of data/elements.csv.
  static const ElementRegistry& builtin();

  /// Parses the `z,symbol,row,col` table. Requires every Z in [1, 86] exactly
  /// once with unique symbols and grid cells; throws DataError otherwise.
  static ElementRegistry from_csv(std::istream& in);

  const Element& at(AtomicNumber z) const;
  std::optional<AtomicNumber> find(std::string_view symbol) const;
  const std::string& symbol(AtomicNumber z) const { return at(z).symbol; }

  /// Element in the adjacent cell, or `z` itself when the move is Stay or
  /// lands on an empty or off-grid cell.
  AtomicNumber grid_neighbor(AtomicNumber z, Direction d) const;

  std::size_t size() const { return elements_.size(); }
  std::span<const Element> elements() const { return elements_; }

 private:
  ElementRegistry() = default;

  std::vector<Element> elements_;  // index z - 1
  std::array<std::array<AtomicNumber, kGridCols + 2>, kGridRows + 2> grid_{};
};

/// The set of elements spanning the RL state vector, sorted by atomic number.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<AtomicNumber> elements);

  std::size_t size() const { return elements_.size(); }
  bool empty() const { return elements_.empty(); }
  bool contains(AtomicNumber z) const;

  /// Position of `z` in the state vector; throws DomainError if absent.
  std::size_t index_of(AtomicNumber z) const;
  AtomicNumber at(std::size_t index) const;
  std::span<const AtomicNumber> elements() const { return elements_; }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::vector<AtomicNumber> elements_;
};

}  // namespace adsorbrl
