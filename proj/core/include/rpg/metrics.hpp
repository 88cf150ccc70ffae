#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rpg/grpo_audit.hpp"
#include "rpg/training.hpp"

namespace rpg {

enum class ColumnType { Integer, Real, Boolean, Text };

struct Column {
  std::string name;
  ColumnType type = ColumnType::Real;
};

using Cell = std::variant<std::int64_t, double, bool, std::string>;
using Row = std::vector<Cell>;

/// Rows that share one schema. Reals are written as the shortest-form
/// 17-significant-digit decimal, which round-trips bit-exactly.
class MetricTable {
 public:
  explicit MetricTable(std::vector<Column> schema);

  const std::vector<Column>& schema() const { return schema_; }
  const std::vector<Row>& rows() const { return rows_; }

  /// Throws DomainError when the row does not match the schema.
  void add_row(Row row);

  /// Header line plus one line per row, '\n' terminated. Text cells are
  /// quoted when they contain a comma, quote or newline.
  std::string to_csv() const;
  /// Array of objects keyed by column name.
  std::string to_json() const;

  /// Parses to_csv output for this schema. Throws DomainError on a header
  /// mismatch or malformed cell, with the line number in the message.
  static MetricTable from_csv(std::vector<Column> schema, std::string_view text);

 private:
  std::vector<Column> schema_;
  std::vector<Row> rows_;
};

std::string format_real(double v);
double parse_real(std::string_view s);

/// Writes `contents` to a sibling temp file and renames it over `path`.
/// Throws IoError naming the path on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

enum class MetricFormat { Csv, Json };

void emit_metrics(const MetricTable& table, MetricFormat format, const std::filesystem::path& path);

/// iteration, j_exact, loss_mean, mean_reward, entropy, div_to_old,
/// div_to_ref, grad_norm, ref_updated
std::vector<Column> trace_schema();
MetricTable trace_table(const TrainTrace& trace);

/// Trace summary plus final logits as a JSON object.
std::string trace_json(const TrainTrace& trace);

/// All report fields, gradient vectors included, as a JSON object.
std::string audit_report_json(const AuditReport& report);

}  // namespace rpg
