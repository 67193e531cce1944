#include "tfbo/trace_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tfbo/errors.hpp"

namespace tfbo {

const char* const kTraceCsvHeader =
    "t,grad_phi_norm_sq,hypergrad_norm_sq,inner_grad_norm_sq,ls_grad_norm_sq,alpha,beta,gamma,"
    "phi,P_t,Q_t,f_val,g_val,elapsed_ms";

namespace {

constexpr std::size_t kColumns = 14;

std::string opt(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  return cells;
}

double parse_real(const std::string& cell, std::size_t line) {
  if (cell == "inf") return INFINITY;
  if (cell == "-inf") return -INFINITY;
  if (cell == "nan") return NAN;
  double value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw ParseError(line, "bad number '" + cell + "'");
  return value;
}

std::size_t parse_count(const std::string& cell, std::size_t line) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw ParseError(line, "bad integer '" + cell + "'");
  return value;
}

std::optional<double> parse_opt(const std::string& cell, std::size_t line) {
  if (cell.empty()) return std::nullopt;
  return parse_real(cell, line);
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res =
      std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& records) {
  out << kTraceCsvHeader << '\n';
  for (const IterationRecord& r : records) {
    out << r.t << ',' << opt(r.grad_phi_norm_sq) << ',' << format_real(r.hypergrad_norm_sq) << ','
        << format_real(r.inner_grad_norm_sq) << ',' << format_real(r.ls_grad_norm_sq) << ','
        << format_real(r.alpha) << ',' << format_real(r.beta) << ',' << format_real(r.gamma)
        << ',' << opt(r.phi) << ',' << r.P << ',' << r.Q << ',' << format_real(r.f_val) << ','
        << format_real(r.g_val) << ',' << opt(r.elapsed_ms) << '\n';
  }
}

void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIoError, "cannot open " + path + " for writing");
  write_trace_csv(out, records);
  out.flush();
  require(static_cast<bool>(out), ErrorKind::kIoError, "failed writing " + path);
}

std::vector<IterationRecord> read_trace_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) throw ParseError(1, "unexpected header");

  std::vector<IterationRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != kColumns) throw ParseError(line_no, "expected 14 columns");
    IterationRecord r;
    r.t = parse_count(c[0], line_no);
    r.grad_phi_norm_sq = parse_opt(c[1], line_no);
    r.hypergrad_norm_sq = parse_real(c[2], line_no);
    r.inner_grad_norm_sq = parse_real(c[3], line_no);
    r.ls_grad_norm_sq = parse_real(c[4], line_no);
    r.alpha = parse_real(c[5], line_no);
    r.beta = parse_real(c[6], line_no);
    r.gamma = parse_real(c[7], line_no);
    r.phi = parse_opt(c[8], line_no);
    r.P = parse_count(c[9], line_no);
    r.Q = parse_count(c[10], line_no);
    r.f_val = parse_real(c[11], line_no);
    r.g_val = parse_real(c[12], line_no);
    r.elapsed_ms = parse_opt(c[13], line_no);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<IterationRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIoError, "cannot open " + path);
  return read_trace_csv(in);
}

}  // namespace tfbo
