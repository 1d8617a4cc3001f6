#pragma once

#include <optional>
#include <string>
#include <vector>

#include "svpl/types.hpp"

namespace svpl::csv {

/// Writes the core dataset schema `x1,...,xd,a,y[,y1,...,yK]`; arms 1-based.
/// The potential-outcome columns appear when oracle truth is attached.
/// When oracle_path is given, a sibling file with per-row optimal-set
/// membership flags and conditional means (plus the secondary-outcome
/// columns when present) is written next to it.
void write_dataset(const Dataset& ds, const std::string& data_path,
                   const std::optional<std::string>& oracle_path = std::nullopt);

/// Reads a dataset written by write_dataset. Oracle truth is reconstructed
/// when oracle_path is supplied (membership flags + means, and potential
/// outcomes when the main file carries them).
Dataset read_dataset(const std::string& data_path,
                     const std::optional<std::string>& oracle_path = std::nullopt);

/// Set-valued policy output: `row,member_1,...,member_K,cardinality`.
void write_sets(const std::vector<TreatmentSet>& sets, int num_arms,
                const std::string& path);
std::vector<TreatmentSet> read_sets(const std::string& path, int* num_arms_out = nullptr);

/// Fixed "%.10g" float formatting shared by every CSV emitter, so reruns
/// under one seed are byte-identical.
std::string format_value(double v);

/// Minimal row-oriented CSV writer.
class Writer {
 public:
  explicit Writer(const std::string& path);
  ~Writer();
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  void flush();
  void close();

 private:
  struct Impl;
  Impl* impl_;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

Table read_table(const std::string& path);

}  // namespace svpl::csv
