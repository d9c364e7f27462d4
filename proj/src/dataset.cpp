#include "adsorbrl/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include "adsorbrl/error.hpp"
#include "csv.hpp"

namespace adsorbrl {

// ---------------------------------------------------------------------------
// Composition

Composition::Composition(std::initializer_list<AtomicNumber> elements)
    : Composition(std::span<const AtomicNumber>(elements.begin(), elements.size())) {}

Composition::Composition(std::span<const AtomicNumber> elements) {
  if (elements.empty() || elements.size() > kMaxElements)
    throw DomainError("a composition holds 1 to 3 elements, got " +
                      std::to_string(elements.size()));
  std::copy(elements.begin(), elements.end(), elements_.begin());
  size_ = elements.size();
  std::sort(elements_.begin(), elements_.begin() + size_);
  for (std::size_t i = 0; i < size_; ++i) {
    if (elements_[i] < 1 || elements_[i] > kMaxAtomicNumber)
      throw DomainError("invalid atomic number " + std::to_string(elements_[i]));
    if (i > 0 && elements_[i] == elements_[i - 1])
      throw DomainError("duplicate element in composition");
  }
}

bool Composition::contains(AtomicNumber z) const {
  return std::find(elements_.begin(), elements_.begin() + size_, z) != elements_.begin() + size_;
}

std::optional<Composition> Composition::with(AtomicNumber z) const {
  if (size_ == kMaxElements || contains(z)) return std::nullopt;
  std::array<AtomicNumber, kMaxElements> buf = elements_;
  buf[size_] = z;
  return Composition(std::span<const AtomicNumber>(buf.data(), size_ + 1));
}

std::optional<Composition> Composition::without_slot(std::size_t slot) const {
  if (slot >= size_ || size_ == 1) return std::nullopt;
  std::array<AtomicNumber, kMaxElements> buf{};
  std::size_t n = 0;
  for (std::size_t i = 0; i < size_; ++i)
    if (i != slot) buf[n++] = elements_[i];
  return Composition(std::span<const AtomicNumber>(buf.data(), n));
}

std::vector<double> Composition::encode(const Vocabulary& vocab) const {
  std::vector<double> v(vocab.size(), 0.0);
  for (AtomicNumber z : elements()) v[vocab.index_of(z)] = 1.0;
  return v;
}

std::string Composition::key(const ElementRegistry& reg) const {
  std::vector<std::string> symbols;
  for (AtomicNumber z : elements()) symbols.push_back(reg.symbol(z));
  std::sort(symbols.begin(), symbols.end());
  std::string out;
  for (const auto& s : symbols) {
    if (!out.empty()) out += '-';
    out += s;
  }
  return out;
}

Composition Composition::from_key(std::string_view key, const ElementRegistry& reg) {
  std::vector<AtomicNumber> zs;
  std::size_t start = 0;
  while (start <= key.size()) {
    const std::size_t end = std::min(key.find('-', start), key.size());
    const auto sym = key.substr(start, end - start);
    const auto z = reg.find(sym);
    if (!z) throw DomainError("unknown element symbol '" + std::string(sym) + "'");
    zs.push_back(*z);
    start = end + 1;
  }
  return Composition(std::span<const AtomicNumber>(zs));
}

// ---------------------------------------------------------------------------
// Adsorbate

Adsorbate adsorbate_from_index(int objective_index) {
  if (objective_index < 1 || objective_index > static_cast<int>(kAdsorbateCount))
    throw DomainError("objective index must be in 1..6, got " + std::to_string(objective_index));
  return kAdsorbates[objective_index - 1];
}

std::string_view to_string(Adsorbate a) {
  switch (a) {
    case Adsorbate::CH2: return "CH2";
    case Adsorbate::CH4: return "CH4";
    case Adsorbate::N2: return "N2";
    case Adsorbate::NH3: return "NH3";
    case Adsorbate::OH2: return "OH2";
    case Adsorbate::OH: return "OH";
  }
  return "?";
}

std::optional<Adsorbate> parse_adsorbate(std::string_view name) {
  while (!name.empty() && name.front() == '*') name.remove_prefix(1);
  while (!name.empty() && name.back() == '*') name.remove_suffix(1);
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "H2O") upper = "OH2";
  for (Adsorbate a : kAdsorbates)
    if (upper == to_string(a)) return a;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Loading

std::vector<std::string> formula_symbols(std::string_view formula) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < formula.size();) {
    const char c = formula[i];
    if (std::isupper(static_cast<unsigned char>(c))) {
      std::string sym(1, c);
      ++i;
      while (i < formula.size() && std::islower(static_cast<unsigned char>(formula[i])))
        sym += formula[i++];
      if (std::find(out.begin(), out.end(), sym) == out.end()) out.push_back(sym);
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '(' || c == ')' ||
               c == '[' || c == ']' || c == ' ') {
      ++i;
    } else {
      throw DomainError(std::string("unexpected character '") + c + "' in formula");
    }
  }
  return out;
}

namespace {

struct Columns {
  std::size_t formula = 0, adsorbate = 1, energy = 2;
};

Columns locate_columns(const std::vector<std::string>& header, std::size_t line_no) {
  auto find = [&](std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DataError("header is missing column '" + std::string(name) + "'", line_no);
  };
  return {find("formula"), find("adsorbate"), find("energy_ev")};
}

}  // namespace

LoadResult load_raw(std::istream& in, const std::optional<Vocabulary>& vocab,
                    const ElementRegistry& reg) {
  LoadResult result;
  std::string line;
  std::size_t line_no = 0;
  std::optional<Columns> cols;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (!cols) {
      cols = locate_columns(fields, line_no);
      continue;
    }
    const std::size_t needed = std::max({cols->formula, cols->adsorbate, cols->energy}) + 1;
    if (fields.size() < needed)
      throw DataError("expected at least " + std::to_string(needed) + " fields", line_no);

    const auto adsorbate = parse_adsorbate(fields[cols->adsorbate]);
    if (!adsorbate) throw DataError("unknown adsorbate '" + fields[cols->adsorbate] + "'", line_no);
    const double energy = detail::parse_double(fields[cols->energy], line_no);

    std::vector<std::string> symbols;
    try {
      symbols = formula_symbols(fields[cols->formula]);
    } catch (const DomainError& e) {
      throw DataError(e.what(), line_no);
    }
    if (symbols.empty()) throw DataError("empty formula", line_no);

    std::vector<AtomicNumber> zs;
    bool unknown = false;
    for (const auto& s : symbols) {
      const auto z = reg.find(s);
      if (!z || (vocab && !vocab->contains(*z))) {
        unknown = true;
        break;
      }
      zs.push_back(*z);
    }
    if (unknown) {
      ++result.rejected_unknown_element;
      result.diagnostics.push_back("line " + std::to_string(line_no) +
                                   ": element outside vocabulary in '" +
                                   fields[cols->formula] + "'");
      continue;
    }
    if (zs.size() > Composition::kMaxElements) {
      ++result.rejected_too_many_elements;
      result.diagnostics.push_back("line " + std::to_string(line_no) + ": more than 3 elements in '" +
                                   fields[cols->formula] + "'");
      continue;
    }
    result.records.push_back({Composition(std::span<const AtomicNumber>(zs)), *adsorbate, energy});
  }
  return result;
}

LoadResult load_raw(const std::string& path, const std::optional<Vocabulary>& vocab,
                    const ElementRegistry& reg) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_raw(in, vocab, reg);
}

// ---------------------------------------------------------------------------
// EnergyTable

EnergyTable EnergyTable::reduce_min_energy(std::span<const EnergyRecord> records) {
  EnergyTable table;
  for (const auto& r : records) {
    auto& slot = table.entries_[r.composition][static_cast<std::size_t>(r.adsorbate)];
    if (!slot) {
      slot = r.energy_ev;
      ++table.counts_[static_cast<std::size_t>(r.adsorbate)];
    } else if (r.energy_ev < *slot) {
      slot = r.energy_ev;
    }
  }
  return table;
}

std::optional<double> EnergyTable::energy(const Composition& c, Adsorbate a) const {
  auto it = entries_.find(c);
  if (it == entries_.end()) return std::nullopt;
  return it->second[static_cast<std::size_t>(a)];
}

const AdsorbateEnergies* EnergyTable::energies(const Composition& c) const {
  auto it = entries_.find(c);
  return it == entries_.end() ? nullptr : &it->second;
}

Vocabulary EnergyTable::vocabulary() const {
  std::set<AtomicNumber> zs;
  for (const auto& [c, _] : entries_)
    for (AtomicNumber z : c.elements()) zs.insert(z);
  return Vocabulary(std::vector<AtomicNumber>(zs.begin(), zs.end()));
}

std::optional<Composition> EnergyTable::argmin(Adsorbate a) const {
  std::optional<Composition> best;
  double best_e = 0.0;
  for (const auto& [c, e] : entries_) {
    const auto& v = e[static_cast<std::size_t>(a)];
    if (v && (!best || *v < best_e)) {
      best = c;
      best_e = *v;
    }
  }
  return best;
}

std::vector<EnergyRecord> EnergyTable::records() const {
  std::vector<EnergyRecord> out;
  for (const auto& [c, e] : entries_)
    for (Adsorbate a : kAdsorbates)
      if (const auto& v = e[static_cast<std::size_t>(a)]) out.push_back({c, a, *v});
  return out;
}

void EnergyTable::write_csv(std::ostream& out, const ElementRegistry& reg) const {
  struct Row {
    std::string key;
    Adsorbate ads;
    double energy;
  };
  std::vector<Row> rows;
  for (const auto& r : records()) rows.push_back({r.composition.key(reg), r.adsorbate, r.energy_ev});
  std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    return std::tie(x.key, x.ads) < std::tie(y.key, y.ads);
  });
  out << "elements,adsorbate,energy_ev\n";
  for (const auto& r : rows)
    out << r.key << ',' << to_string(r.ads) << ',' << detail::format_double(r.energy) << '\n';
}

EnergyTable EnergyTable::read_csv(std::istream& in, const ElementRegistry& reg) {
  std::vector<EnergyRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (header) {
      if (fields.size() < 3 || fields[0] != "elements" || fields[1] != "adsorbate" ||
          fields[2] != "energy_ev")
        throw DataError("energy table header must be elements,adsorbate,energy_ev", line_no);
      header = false;
      continue;
    }
    if (fields.size() < 3) throw DataError("expected 3 fields", line_no);
    const auto ads = parse_adsorbate(fields[1]);
    if (!ads) throw DataError("unknown adsorbate '" + fields[1] + "'", line_no);
    try {
      records.push_back({Composition::from_key(fields[0], reg), *ads,
                         detail::parse_double(fields[2], line_no)});
    } catch (const DomainError& e) {
      throw DataError(e.what(), line_no);
    }
  }
  return reduce_min_energy(records);
}

EnergyTable load_table(const std::string& path, LoadResult* raw_diagnostics) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string first;
  while (std::getline(in, first) && detail::trim(first).empty()) {
  }
  in.clear();
  in.seekg(0);
  if (detail::trim(first).starts_with("elements")) return EnergyTable::read_csv(in);
  LoadResult raw = load_raw(in);
  EnergyTable table = EnergyTable::reduce_min_energy(raw.records);
  if (raw_diagnostics) *raw_diagnostics = std::move(raw);
  return table;
}

// ---------------------------------------------------------------------------
// Subgraphs

CompositionSet::CompositionSet(std::vector<Composition> items) : items_(std::move(items)) {
  std::sort(items_.begin(), items_.end());
  items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
}

bool CompositionSet::contains(const Composition& c) const {
  return std::binary_search(items_.begin(), items_.end(), c);
}

CompositionSet known_subgraph(const EnergyTable& table, std::span<const Adsorbate> targets) {
  if (targets.empty()) throw DomainError("known_subgraph needs at least one target adsorbate");
  std::vector<Composition> out;
  for (const auto& [c, e] : table.entries()) {
    for (Adsorbate a : targets) {
      if (e[static_cast<std::size_t>(a)]) {
        out.push_back(c);
        break;
      }
    }
  }
  return CompositionSet(std::move(out));
}

std::vector<Composition> composition_neighbors(const Composition& c, const Vocabulary& vocab) {
  std::vector<Composition> out;
  if (c.size() < Composition::kMaxElements)
    for (AtomicNumber z : vocab.elements())
      if (auto next = c.with(z)) out.push_back(*next);
  for (std::size_t slot = 0; slot < c.size(); ++slot)
    if (auto next = c.without_slot(slot)) out.push_back(*next);
  return out;
}

EgoGraph ego_graph(const EnergyTable& table, const Composition& center, int hops) {
  if (!table.contains(center)) throw DomainError("ego graph center is not in the table");
  if (hops < 0) throw DomainError("hops must be non-negative");
  const Vocabulary vocab = table.vocabulary();

  EgoGraph g;
  std::map<Composition, int> hop_of;
  std::deque<Composition> queue{center};
  hop_of[center] = 0;
  while (!queue.empty()) {
    const Composition cur = queue.front();
    queue.pop_front();
    const int h = hop_of[cur];
    g.nodes.push_back({cur, h});
    if (h == hops) continue;
    for (const auto& next : composition_neighbors(cur, vocab)) {
      if (!table.contains(next) || hop_of.contains(next)) continue;
      hop_of[next] = h + 1;
      queue.push_back(next);
    }
  }
  for (const auto& [a, ha] : hop_of) {
    for (const auto& b : composition_neighbors(a, vocab)) {
      auto it = hop_of.find(b);
      if (it == hop_of.end() || !(a < b)) continue;
      g.edges.push_back({a, b, std::max(ha, it->second)});
    }
  }
  return g;
}

void export_ego_graph(const EgoGraph& graph, std::ostream& out, const ElementRegistry& reg) {
  for (const auto& n : graph.nodes) out << "# " << n.composition.key(reg) << '\t' << n.hop << '\n';
  for (const auto& e : graph.edges)
    out << e.a.key(reg) << '\t' << e.b.key(reg) << '\t' << e.hop << '\n';
}

}  // namespace adsorbrl
