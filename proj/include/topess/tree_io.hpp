#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "topess/trees.hpp"

namespace topess {

/// Post-load trimming applied identically to trees and the log trace.
struct LoadOptions {
  std::size_t burnin = 0;  ///< samples dropped from the front
  std::size_t thin = 1;    ///< keep every thin-th remaining sample
};

/// One Newick per line; blank lines and lines starting with '#' are skipped.
/// The taxon map comes from `taxa` when given, otherwise from the first tree.
Chain read_tree_stream(std::istream& in, TaxonMapPtr taxa = nullptr, const LoadOptions& opts = {});
Chain read_tree_file(const std::filesystem::path& path, TaxonMapPtr taxa = nullptr, const LoadOptions& opts = {});

/// Reads the named column of a tab-separated file with a header row.
std::vector<double> read_log_column(std::istream& in, const std::string& column = "lnP");
std::vector<double> read_log_column(const std::filesystem::path& path, const std::string& column = "lnP");

/// Loads trees and, when `log_path` is non-empty, the aligned log-density column.
Chain read_chain(const std::filesystem::path& tree_path, const std::filesystem::path& log_path,
                 TaxonMapPtr taxa = nullptr, const LoadOptions& opts = {}, const std::string& column = "lnP");

void write_tree_stream(std::ostream& out, const Chain& chain);

/// Writes `sample<TAB>lnP` rows for the chain's log-density trace.
void write_log_stream(std::ostream& out, const Chain& chain);

/// Round-trip-exact decimal for a double.
std::string format_double(double x);

}  // namespace topess
