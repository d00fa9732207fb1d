#include "topess/tree_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "topess/errors.hpp"

namespace topess {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.emplace_back(trim(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start)));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename T>
std::vector<T> trim_samples(std::vector<T> xs, const LoadOptions& opts) {
  if (opts.thin == 0) throw std::invalid_argument("thin must be >= 1");
  std::vector<T> out;
  for (std::size_t i = opts.burnin; i < xs.size(); i += opts.thin) out.push_back(std::move(xs[i]));
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

Chain read_tree_stream(std::istream& in, TaxonMapPtr taxa, const LoadOptions& opts) {
  std::vector<Topology> trees;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    try {
      trees.push_back(parse_newick(body, taxa));
    } catch (const Error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!taxa) taxa = trees.back().taxa_ptr();
  }
  if (trees.empty()) throw DataError("tree input contains no trees");
  Chain c{taxa, trim_samples(std::move(trees), opts), std::nullopt};
  return c;
}

Chain read_tree_file(const std::filesystem::path& path, TaxonMapPtr taxa, const LoadOptions& opts) {
  auto in = open_input(path);
  try {
    return read_tree_stream(in, std::move(taxa), opts);
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<double> read_log_column(std::istream& in, const std::string& column) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    header = split_tabs(line);
    break;
  }
  std::size_t col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) col = i;
  if (col == header.size()) throw ParseError("log file has no column named '" + column + "'");

  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() <= col) throw ParseError("log row " + std::to_string(row) + " is missing column '" + column + "'");
    const auto& f = fields[col];
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || ptr != f.data() + f.size())
      throw ParseError("log row " + std::to_string(row) + ": not a number '" + f + "'");
    values.push_back(v);
  }
  return values;
}

std::vector<double> read_log_column(const std::filesystem::path& path, const std::string& column) {
  auto in = open_input(path);
  try {
    return read_log_column(in, column);
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Chain read_chain(const std::filesystem::path& tree_path, const std::filesystem::path& log_path, TaxonMapPtr taxa,
                 const LoadOptions& opts, const std::string& column) {
  // Trim after alignment so that burn-in/thinning hit both files identically.
  Chain c = read_tree_file(tree_path, std::move(taxa));
  if (!log_path.empty()) {
    auto trace = read_log_column(log_path, column);
    if (trace.size() != c.samples.size())
      throw DataError("'" + log_path.string() + "' has " + std::to_string(trace.size()) + " rows but '" +
                      tree_path.string() + "' has " + std::to_string(c.samples.size()) + " trees");
    c.log_density = trim_samples(std::move(trace), opts);
  }
  c.samples = trim_samples(std::move(c.samples), opts);
  if (c.samples.empty()) throw DataError("no samples left after burn-in/thinning in '" + tree_path.string() + "'");
  return c;
}

void write_tree_stream(std::ostream& out, const Chain& chain) {
  for (const auto& t : chain.samples) out << serialize_newick(t) << '\n';
}

void write_log_stream(std::ostream& out, const Chain& chain) {
  out << "sample\tlnP\n";
  if (!chain.log_density) return;
  for (std::size_t i = 0; i < chain.log_density->size(); ++i)
    out << i << '\t' << format_double((*chain.log_density)[i]) << '\n';
}

std::string format_double(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace topess
