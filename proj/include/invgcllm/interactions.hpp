#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace invgcllm {

// One observed user-item interaction. Ids are opaque integers taken
// verbatim from the input file; dense indices are assigned at graph build.
struct Interaction {
  std::int64_t user = 0;
  std::int64_t item = 0;
  double rating = 0.0;          // kept but unused by training
  std::int64_t timestamp = 0;   // seconds, >= 0
};

enum class InteractionFormat {
  MovieLensDat,  // "user::item::rating::timestamp"
  Tsv,           // "user<TAB>item<TAB>rating<TAB>timestamp"
};

InteractionFormat format_from_name(std::string_view name);
std::string format_name(InteractionFormat f);

struct ParseError : std::runtime_error {
  ParseError(const std::string& origin, std::size_t line, const std::string& what);
  std::size_t line_number;
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

std::vector<Interaction> parse_interactions(std::istream& in, InteractionFormat format,
                                            bool tsv_header, const std::string& origin);

std::vector<Interaction> ingest_interactions(const std::string& path,
                                             InteractionFormat format,
                                             bool tsv_header = false);

// Split manifests are written as headerless 4-column TSV.
void write_interactions_tsv(const std::string& path,
                            const std::vector<Interaction>& xs);

}  // namespace invgcllm
