#include "adsorbrl/elements.hpp"

#include <algorithm>
#include <istream>
#include <set>
#include <sstream>

#include "adsorbrl/elements_data.hpp"
#include "adsorbrl/error.hpp"
#include "csv.hpp"

namespace adsorbrl {

Direction inverse(Direction d) {
  switch (d) {
    case Direction::Left: return Direction::Right;
    case Direction::Right: return Direction::Left;
    case Direction::Up: return Direction::Down;
    case Direction::Down: return Direction::Up;
    case Direction::Stay: break;
  }
  return Direction::Stay;
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Stay: return "stay";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
    case Direction::Up: return "up";
    case Direction::Down: return "down";
  }
  return "?";
}

const ElementRegistry& ElementRegistry::builtin() {
  static const ElementRegistry registry = [] {
    std::istringstream in(detail::kElementsCsv);
    return from_csv(in);
  }();
  return registry;
}

ElementRegistry ElementRegistry::from_csv(std::istream& in) {
  ElementRegistry reg;
  reg.elements_.resize(kMaxAtomicNumber);
  std::vector<bool> seen(kMaxAtomicNumber + 1, false);
  std::set<std::string> symbols;

  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (header) {
      if (fields.size() < 4 || fields[0] != "z" || fields[1] != "symbol" || fields[2] != "row" ||
          fields[3] != "col")
        throw DataError("element table header must be z,symbol,row,col", line_no);
      header = false;
      continue;
    }
    if (fields.size() < 4) throw DataError("expected 4 fields", line_no);
    const int z = detail::parse_int(fields[0], line_no);
    const int row = detail::parse_int(fields[2], line_no);
    const int col = detail::parse_int(fields[3], line_no);
    if (z < 1 || z > kMaxAtomicNumber) throw DataError("atomic number out of range", line_no);
    if (row < 1 || row > kGridRows || col < 1 || col > kGridCols)
      throw DataError("grid position out of range", line_no);
    if (seen[z]) throw DataError("duplicate atomic number", line_no);
    if (!symbols.insert(fields[1]).second) throw DataError("duplicate symbol", line_no);
    if (reg.grid_[row][col] != 0) throw DataError("duplicate grid position", line_no);
    seen[z] = true;
    reg.grid_[row][col] = z;
    reg.elements_[z - 1] = Element{z, fields[1], GridPos{row, col}};
  }
  for (int z = 1; z <= kMaxAtomicNumber; ++z)
    if (!seen[z]) throw DataError("element table is missing Z=" + std::to_string(z));
  return reg;
}

const Element& ElementRegistry::at(AtomicNumber z) const {
  if (z < 1 || z > static_cast<AtomicNumber>(elements_.size()))
    throw DomainError("unknown atomic number " + std::to_string(z));
  return elements_[z - 1];
}

std::optional<AtomicNumber> ElementRegistry::find(std::string_view symbol) const {
  for (const auto& e : elements_)
    if (e.symbol == symbol) return e.z;
  return std::nullopt;
}

AtomicNumber ElementRegistry::grid_neighbor(AtomicNumber z, Direction d) const {
  GridPos p = at(z).pos;
  switch (d) {
    case Direction::Stay: return z;
    case Direction::Left: --p.col; break;
    case Direction::Right: ++p.col; break;
    case Direction::Up: --p.row; break;
    case Direction::Down: ++p.row; break;
  }
  // grid_ has a one-cell empty border, so off-grid lookups read 0.
  const AtomicNumber next = grid_[p.row][p.col];
  return next == 0 ? z : next;
}

Vocabulary::Vocabulary(std::vector<AtomicNumber> elements) : elements_(std::move(elements)) {
  std::sort(elements_.begin(), elements_.end());
  elements_.erase(std::unique(elements_.begin(), elements_.end()), elements_.end());
  for (AtomicNumber z : elements_)
    if (z < 1 || z > kMaxAtomicNumber)
      throw DomainError("vocabulary element out of range: " + std::to_string(z));
}

bool Vocabulary::contains(AtomicNumber z) const {
  return std::binary_search(elements_.begin(), elements_.end(), z);
}

std::size_t Vocabulary::index_of(AtomicNumber z) const {
  auto it = std::lower_bound(elements_.begin(), elements_.end(), z);
  if (it == elements_.end() || *it != z)
    throw DomainError("element Z=" + std::to_string(z) + " is not in the vocabulary");
  return static_cast<std::size_t>(it - elements_.begin());
}

AtomicNumber Vocabulary::at(std::size_t index) const {
  if (index >= elements_.size()) throw DomainError("vocabulary index out of range");
  return elements_[index];
}

}  // namespace adsorbrl
