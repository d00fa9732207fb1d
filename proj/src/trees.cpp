#include "topess/trees.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <numeric>
#include <stdexcept>

#include "topess/errors.hpp"

namespace topess {

namespace {

std::vector<std::uint64_t> empty_mask(std::size_t n_taxa) {
  return std::vector<std::uint64_t>((n_taxa + 63) / 64, 0);
}

void set_bit(std::vector<std::uint64_t>& m, std::size_t i) { m[i / 64] |= std::uint64_t{1} << (i % 64); }

bool get_bit(const std::vector<std::uint64_t>& m, std::size_t i) { return (m[i / 64] >> (i % 64)) & 1u; }

std::size_t popcount(const std::vector<std::uint64_t>& m) {
  std::size_t c = 0;
  for (auto w : m) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

void complement_in_place(std::vector<std::uint64_t>& m, std::size_t n_taxa) {
  for (auto& w : m) w = ~w;
  if (const std::size_t tail = n_taxa % 64; tail != 0) m.back() &= (std::uint64_t{1} << tail) - 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// TaxonMap

TaxonMap::TaxonMap(std::vector<std::string> names, std::size_t max_taxa) : names_(std::move(names)) {
  if (names_.size() > max_taxa)
    throw std::invalid_argument("taxon count " + std::to_string(names_.size()) + " exceeds cap " +
                                std::to_string(max_taxa));
  index_.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw DataError("empty taxon label");
    if (!index_.emplace(names_[i], i).second) throw DataError("duplicate taxon label '" + names_[i] + "'");
  }
}

std::optional<std::size_t> TaxonMap::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TaxonMapPtr make_taxon_map(std::vector<std::string> names, std::size_t max_taxa) {
  return std::make_shared<const TaxonMap>(std::move(names), max_taxa);
}

bool same_taxa(const TaxonMapPtr& a, const TaxonMapPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

// ---------------------------------------------------------------------------
// Split

Split::Split(std::vector<std::uint64_t> words, std::size_t n_taxa) : words_(std::move(words)) {
  if (words_.size() != (n_taxa + 63) / 64) throw std::invalid_argument("split mask width does not match taxon count");
  if (n_taxa > 0 && get_bit(words_, 0)) complement_in_place(words_, n_taxa);
}

Split Split::from_members(std::span<const std::size_t> members, std::size_t n_taxa) {
  auto mask = empty_mask(n_taxa);
  for (auto i : members) {
    if (i >= n_taxa) throw std::out_of_range("split member index out of range");
    set_bit(mask, i);
  }
  return Split(std::move(mask), n_taxa);
}

std::size_t Split::count() const { return popcount(words_); }

std::vector<std::size_t> Split::members() const {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    auto bits = words_[w];
    while (bits) {
      out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
      bits &= bits - 1;
    }
  }
  return out;
}

bool Split::is_nontrivial(std::size_t n_taxa) const {
  const auto c = count();
  return c >= 2 && n_taxa - c >= 2;
}

bool compatible(const Split& a, const Split& b) {
  // Both masks exclude taxon 0, so Aᶜ∩Bᶜ is never empty; test the other three.
  bool ab = false, a_not_b = false, b_not_a = false;
  const auto& wa = a.words();
  const auto& wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    ab |= (wa[i] & wb[i]) != 0;
    a_not_b |= (wa[i] & ~wb[i]) != 0;
    b_not_a |= (wb[i] & ~wa[i]) != 0;
  }
  return !ab || !a_not_b || !b_not_a;
}

std::size_t SplitHash::operator()(const Split& s) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ull;
  for (auto w : s.words()) h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

// ---------------------------------------------------------------------------
// Topology

Topology Topology::trusted(TaxonMapPtr taxa, std::vector<Split> splits) {
  Topology t;
  t.taxa_ = std::move(taxa);
  std::sort(splits.begin(), splits.end());
  splits.erase(std::unique(splits.begin(), splits.end()), splits.end());
  t.splits_ = std::move(splits);
  return t;
}

Topology::Topology(TaxonMapPtr taxa, std::vector<Split> splits) {
  if (!taxa) throw std::invalid_argument("topology requires a taxon map");
  const std::size_t n = taxa->size();
  for (const auto& s : splits) {
    if (s.words().size() != taxa->words()) throw std::invalid_argument("split width does not match taxon map");
    if (s.test(0)) throw std::invalid_argument("split is not canonical");
    if (!s.is_nontrivial(n)) throw std::invalid_argument("split is trivial");
  }
  *this = trusted(std::move(taxa), std::move(splits));
  for (std::size_t i = 0; i < splits_.size(); ++i)
    for (std::size_t j = i + 1; j < splits_.size(); ++j)
      if (!compatible(splits_[i], splits_[j])) throw std::invalid_argument("incompatible splits in topology");
}

bool Topology::contains(const Split& s) const { return std::binary_search(splits_.begin(), splits_.end(), s); }

bool operator==(const Topology& a, const Topology& b) {
  return a.splits_ == b.splits_ && same_taxa(a.taxa_, b.taxa_);
}

std::size_t TopologyHash::operator()(const Topology& t) const noexcept {
  std::size_t h = t.splits().size();
  SplitHash sh;
  for (const auto& s : t.splits()) h ^= sh(s) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

void Chain::validate() const {
  if (!taxa) throw DataError("chain has no taxon map");
  for (const auto& t : samples)
    if (!same_taxa(t.taxa_ptr(), taxa)) throw DataError("chain sample uses a different taxon set");
  if (log_density && log_density->size() != samples.size())
    throw DataError("log-density trace length " + std::to_string(log_density->size()) +
                    " does not match sample count " + std::to_string(samples.size()));
}

// ---------------------------------------------------------------------------
// Newick

namespace {

struct NewickNode {
  std::vector<std::size_t> children;
  std::string label;
};

class NewickReader {
 public:
  explicit NewickReader(std::string_view text) : text_(text) {}

  std::vector<NewickNode> read() {
    skip();
    const std::size_t root = subtree(0);
    skip();
    if (pos_ < text_.size() && text_[pos_] == ':') branch_length();
    skip();
    if (pos_ >= text_.size() || text_[pos_] != ';') fail("expected ';'");
    ++pos_;
    skip();
    if (pos_ != text_.size()) fail("trailing characters after ';'");
    if (root != 0) fail("internal error: root index");
    return std::move(nodes_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("newick: " + what + " at offset " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '[') {
        const auto close = text_.find(']', pos_);
        if (close == std::string_view::npos) fail("unterminated comment");
        pos_ = close + 1;
      } else {
        break;
      }
    }
  }

  static bool is_delim(char c) {
    return c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' || c == '\'' ||
           std::isspace(static_cast<unsigned char>(c));
  }

  std::string label() {
    skip();
    std::string out;
    if (pos_ < text_.size() && text_[pos_] == '\'') {
      ++pos_;
      while (true) {
        if (pos_ >= text_.size()) fail("unterminated quoted label");
        if (text_[pos_] == '\'') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '\'') {
            out.push_back('\'');
            pos_ += 2;
            continue;
          }
          ++pos_;
          break;
        }
        out.push_back(text_[pos_++]);
      }
      return out;
    }
    while (pos_ < text_.size() && !is_delim(text_[pos_])) out.push_back(text_[pos_++]);
    return out;
  }

  void branch_length() {
    ++pos_;  // ':'
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_delim(text_[pos_])) ++pos_;
    if (start == pos_) fail("missing branch length");
    const std::string num(text_.substr(start, pos_ - start));
    try {
      std::size_t used = 0;
      (void)std::stod(num, &used);
      if (used != num.size()) fail("bad branch length '" + num + "'");
    } catch (const std::logic_error&) {
      fail("bad branch length '" + num + "'");
    }
  }

  std::size_t subtree(int depth) {
    if (depth > 100000) fail("nesting too deep");
    skip();
    const std::size_t me = nodes_.size();
    nodes_.emplace_back();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      while (true) {
        const std::size_t child = subtree(depth + 1);
        nodes_[me].children.push_back(child);
        skip();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        if (text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail(std::string("unexpected character '") + text_[pos_] + "'");
      }
      (void)label();  // internal labels are discarded
    } else {
      nodes_[me].label = label();
      if (nodes_[me].label.empty()) fail("empty leaf label");
    }
    skip();
    if (depth > 0 && pos_ < text_.size() && text_[pos_] == ':') branch_length();
    return me;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<NewickNode> nodes_;
};

}  // namespace

Topology parse_newick(std::string_view text, TaxonMapPtr taxa) {
  const auto nodes = NewickReader(text).read();

  std::vector<std::string> leaf_labels;
  for (const auto& node : nodes)
    if (node.children.empty()) leaf_labels.push_back(node.label);
  if (leaf_labels.size() < 3) throw ParseError("newick: fewer than 3 leaves");
  {
    auto sorted = leaf_labels;
    std::sort(sorted.begin(), sorted.end());
    if (auto dup = std::adjacent_find(sorted.begin(), sorted.end()); dup != sorted.end())
      throw ParseError("newick: duplicate leaf label '" + *dup + "'");
    if (!taxa) {
      taxa = make_taxon_map(std::move(sorted));
    } else if (taxa->size() != leaf_labels.size()) {
      throw DataError("newick: tree has " + std::to_string(leaf_labels.size()) + " leaves but taxon map has " +
                      std::to_string(taxa->size()));
    }
  }

  const std::size_t n = taxa->size();
  std::vector<std::vector<std::uint64_t>> below(nodes.size());
  std::vector<Split> splits;
  // Nodes are stored in preorder, so children always follow their parent.
  for (std::size_t k = nodes.size(); k-- > 0;) {
    auto mask = empty_mask(n);
    if (nodes[k].children.empty()) {
      const auto idx = taxa->find(nodes[k].label);
      if (!idx) throw DataError("newick: leaf '" + nodes[k].label + "' not in taxon map");
      set_bit(mask, *idx);
    } else {
      for (auto c : nodes[k].children)
        for (std::size_t w = 0; w < mask.size(); ++w) mask[w] |= below[c][w];
    }
    if (k != 0) {
      Split s(mask, n);
      if (s.is_nontrivial(n)) splits.push_back(std::move(s));
    }
    below[k] = std::move(mask);
  }
  return Topology::trusted(std::move(taxa), std::move(splits));
}

namespace {

struct Cluster {
  std::vector<std::uint64_t> mask;
  std::size_t first;  // smallest member index
  std::vector<std::size_t> children;  // indices into the cluster table
  std::vector<std::size_t> leaves;
};

bool subset_of(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] & ~b[i]) return false;
  return true;
}

std::size_t first_member(const std::vector<std::uint64_t>& m) {
  for (std::size_t w = 0; w < m.size(); ++w)
    if (m[w]) return w * 64 + static_cast<std::size_t>(std::countr_zero(m[w]));
  return SIZE_MAX;
}

void append_label(const std::string& name, std::string& out) {
  if (name.find_first_of("()[]':;, \t") == std::string::npos) {
    out += name;
    return;
  }
  out.push_back('\'');
  for (char ch : name) {
    if (ch == '\'') out.push_back('\'');
    out.push_back(ch);
  }
  out.push_back('\'');
}

void emit(const std::vector<Cluster>& table, std::size_t c, const TaxonMap& taxa, std::string& out) {
  // Merge child clusters and direct leaves by smallest member index.
  std::vector<std::pair<std::size_t, std::ptrdiff_t>> items;  // (first index, cluster or -leaf-1)
  for (auto ch : table[c].children) items.emplace_back(table[ch].first, static_cast<std::ptrdiff_t>(ch));
  for (auto leaf : table[c].leaves) items.emplace_back(leaf, -static_cast<std::ptrdiff_t>(leaf) - 1);
  std::sort(items.begin(), items.end());
  bool first = true;
  for (const auto& [key, ref] : items) {
    if (!first) out.push_back(',');
    first = false;
    if (ref < 0) {
      append_label(taxa.name(static_cast<std::size_t>(-ref - 1)), out);
    } else {
      out.push_back('(');
      emit(table, static_cast<std::size_t>(ref), taxa, out);
      out.push_back(')');
    }
  }
}

}  // namespace

std::string serialize_newick(const Topology& t) {
  const std::size_t n = t.n_taxa();
  // Root at the node adjacent to taxon 0; every stored split side is then a clade.
  std::vector<Cluster> table;
  table.reserve(t.splits().size() + 1);
  {
    auto all = empty_mask(n);
    for (std::size_t i = 1; i < n; ++i) set_bit(all, i);
    table.push_back({std::move(all), 1, {}, {}});
  }
  for (const auto& s : t.splits()) table.push_back({s.words(), first_member(s.words()), {}, {}});
  // Parent of each cluster: the smallest strict superset.
  std::vector<std::size_t> sizes(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) sizes[i] = popcount(table[i].mask);
  for (std::size_t i = 1; i < table.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < table.size(); ++j) {
      if (j == i || sizes[j] <= sizes[i] || !subset_of(table[i].mask, table[j].mask)) continue;
      if (sizes[j] < sizes[best]) best = j;
    }
    table[best].children.push_back(i);
  }
  // Each leaf hangs from the smallest cluster containing it.
  for (std::size_t leaf = 1; leaf < n; ++leaf) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < table.size(); ++j)
      if (get_bit(table[j].mask, leaf) && sizes[j] < sizes[best]) best = j;
    table[best].leaves.push_back(leaf);
  }
  std::string out = "(";
  append_label(t.taxa().name(0), out);
  out.push_back(',');
  emit(table, 0, t.taxa(), out);
  out += ");";
  return out;
}

Topology mrc_tree(const std::map<Split, double>& split_probs, const TaxonMapPtr& taxa, double threshold) {
  if (!(threshold >= 0.5)) throw std::invalid_argument("consensus threshold must be >= 0.5");
  std::vector<Split> kept;
  for (const auto& [s, p] : split_probs) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("split probability outside [0,1]");
    if (p > threshold) kept.push_back(s);
  }
  return Topology(taxa, std::move(kept));
}

std::string split_label(const Split& s, const TaxonMap& taxa) {
  auto side = s.members();
  if (side.size() * 2 > taxa.size()) {
    std::vector<std::size_t> other;
    for (std::size_t i = 0; i < taxa.size(); ++i)
      if (!s.test(i)) other.push_back(i);
    side = std::move(other);
  }
  std::string out;
  for (std::size_t k = 0; k < side.size(); ++k) {
    if (k) out.push_back(';');
    out += taxa.name(side[k]);
  }
  return out;
}

}  // namespace topess
