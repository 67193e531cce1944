#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tfbo/solvers.hpp"

namespace tfbo {

/// Column order of trace CSV files.
extern const char* const kTraceCsvHeader;

/// 17 significant digits; parses back to the identical double.
std::string format_real(double value);

void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& records);
/// Writes to `path`, throwing IOError on failure.
void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& records);

/// Parses what write_trace_csv produced. Empty cells become unset optionals.
std::vector<IterationRecord> read_trace_csv(std::istream& in);
std::vector<IterationRecord> read_trace_csv(const std::string& path);

}  // namespace tfbo
