#include "invgcllm/interactions.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace invgcllm {

InteractionFormat format_from_name(std::string_view name) {
  if (name == "movielens-dat") return InteractionFormat::MovieLensDat;
  if (name == "tsv") return InteractionFormat::Tsv;
  throw ConfigError("unknown interaction format: " + std::string(name));
}

std::string format_name(InteractionFormat f) {
  return f == InteractionFormat::MovieLensDat ? "movielens-dat" : "tsv";
}

ParseError::ParseError(const std::string& origin, std::size_t line, const std::string& what)
    : std::runtime_error(origin + ":" + std::to_string(line) + ": " + what),
      line_number(line) {}

namespace {

std::vector<std::string_view> split_by(std::string_view s, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + sep.size();
  }
  return out;
}

bool parse_i64(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
  if (s.empty()) return false;
  std::string buf(s);
  char* end = nullptr;
  errno = 0;
  out = std::strtod(buf.c_str(), &end);
  return errno == 0 && end == buf.c_str() + buf.size();
}

Interaction parse_line(std::string_view line, std::string_view sep,
                       const std::string& origin, std::size_t line_no) {
  const auto fields = split_by(line, sep);
  if (fields.size() != 4)
    throw ParseError(origin, line_no,
                     "expected 4 fields, got " + std::to_string(fields.size()));
  Interaction x;
  if (!parse_i64(fields[0], x.user))
    throw ParseError(origin, line_no, "bad user id '" + std::string(fields[0]) + "'");
  if (!parse_i64(fields[1], x.item))
    throw ParseError(origin, line_no, "bad item id '" + std::string(fields[1]) + "'");
  if (!parse_real(fields[2], x.rating))
    throw ParseError(origin, line_no, "bad rating '" + std::string(fields[2]) + "'");
  if (!parse_i64(fields[3], x.timestamp) || x.timestamp < 0)
    throw ParseError(origin, line_no, "bad timestamp '" + std::string(fields[3]) + "'");
  return x;
}

}  // namespace

std::vector<Interaction> parse_interactions(std::istream& in, InteractionFormat format,
                                            bool tsv_header, const std::string& origin) {
  const std::string_view sep = format == InteractionFormat::MovieLensDat ? "::" : "\t";
  std::vector<Interaction> out;
  std::string line;
  std::size_t line_no = 0;
  bool skip_header = format == InteractionFormat::Tsv && tsv_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skip_header) {
      skip_header = false;
      continue;
    }
    if (line.empty()) continue;
    out.push_back(parse_line(line, sep, origin, line_no));
  }
  return out;
}

std::vector<Interaction> ingest_interactions(const std::string& path,
                                             InteractionFormat format, bool tsv_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interactions file: " + path);
  return parse_interactions(in, format, tsv_header, path);
}

void write_interactions_tsv(const std::string& path, const std::vector<Interaction>& xs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[64];
  for (const Interaction& x : xs) {
    std::snprintf(buf, sizeof(buf), "%.17g", x.rating);
    out << x.user << '\t' << x.item << '\t' << buf << '\t' << x.timestamp << '\n';
  }
}

}  // namespace invgcllm
