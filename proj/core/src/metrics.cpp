#include "rpg/metrics.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "rpg/errors.hpp"

namespace rpg {

namespace {

using nlohmann::json;

bool matches(ColumnType t, const Cell& c) {
  switch (t) {
    case ColumnType::Integer:
      return std::holds_alternative<std::int64_t>(c);
    case ColumnType::Real:
      return std::holds_alternative<double>(c);
    case ColumnType::Boolean:
      return std::holds_alternative<bool>(c);
    case ColumnType::Text:
      return std::holds_alternative<std::string>(c);
  }
  return false;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_real(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else {
          return quote_csv(v);
        }
      },
      c);
}

json cell_json(const Cell& c) {
  return std::visit([](const auto& v) { return json(v); }, c);
}

// Splits CSV text into records of fields, honoring quoted fields.
std::vector<std::vector<std::string>> split_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
      continue;
    }
    any = true;
    if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      fields.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(fields));
      fields.clear();
      any = false;
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (any || !field.empty() || !fields.empty()) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  return records;
}

Cell parse_cell(ColumnType t, const std::string& s, std::size_t line) {
  auto fail = [&]() {
    return DomainError("line " + std::to_string(line) + ": malformed cell '" + s + "'");
  };
  switch (t) {
    case ColumnType::Integer: {
      std::int64_t v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) throw fail();
      return v;
    }
    case ColumnType::Real:
      try {
        return parse_real(s);
      } catch (const DomainError&) {
        throw fail();
      }
    case ColumnType::Boolean:
      if (s == "true") return true;
      if (s == "false") return false;
      throw fail();
    case ColumnType::Text:
      return s;
  }
  throw fail();
}

}  // namespace

MetricTable::MetricTable(std::vector<Column> schema) : schema_(std::move(schema)) {}

void MetricTable::add_row(Row row) {
  if (row.size() != schema_.size()) {
    throw DomainError("row has " + std::to_string(row.size()) + " cells, schema has " +
                      std::to_string(schema_.size()));
  }
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!matches(schema_[i].type, row[i])) {
      throw DomainError("cell type mismatch in column " + schema_[i].name);
    }
  }
  rows_.push_back(std::move(row));
}

std::string MetricTable::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (i) out += ',';
    out += quote_csv(schema_[i].name);
  }
  out += '\n';
  for (const Row& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string MetricTable::to_json() const {
  json arr = json::array();
  for (const Row& row : rows_) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[schema_[i].name] = cell_json(row[i]);
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

MetricTable MetricTable::from_csv(std::vector<Column> schema, std::string_view text) {
  const auto records = split_csv(text);
  if (records.empty()) throw DomainError("line 1: missing header");
  const auto& header = records.front();
  if (header.size() != schema.size()) throw DomainError("line 1: header width differs from schema");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != schema[i].name) {
      throw DomainError("line 1: expected column '" + schema[i].name + "', got '" + header[i] + "'");
    }
  }
  MetricTable table(std::move(schema));
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != table.schema_.size()) {
      throw DomainError("line " + std::to_string(r + 1) + ": wrong number of cells");
    }
    Row row;
    row.reserve(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
      row.push_back(parse_cell(table.schema_[i].type, rec[i], r + 1));
    }
    table.rows_.push_back(std::move(row));
  }
  return table;
}

std::string format_real(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw DomainError("format_real failed");
  return std::string(buf, p);
}

double parse_real(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw DomainError("not a real number: '" + std::string(s) + "'");
  }
  return v;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.string() + ": cannot create directory: " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string() + ": cannot open for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError(tmp.string() + ": write failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError(path.string() + ": rename failed");
  }
}

void emit_metrics(const MetricTable& table, MetricFormat format, const std::filesystem::path& path) {
  write_file_atomic(path, format == MetricFormat::Csv ? table.to_csv() : table.to_json());
}

std::vector<Column> trace_schema() {
  return {
      {"iteration", ColumnType::Integer},  {"j_exact", ColumnType::Real},
      {"loss_mean", ColumnType::Real},     {"mean_reward", ColumnType::Real},
      {"entropy", ColumnType::Real},       {"div_to_old", ColumnType::Real},
      {"div_to_ref", ColumnType::Real},    {"grad_norm", ColumnType::Real},
      {"ref_updated", ColumnType::Boolean},
  };
}

MetricTable trace_table(const TrainTrace& trace) {
  MetricTable table(trace_schema());
  for (const IterationRecord& r : trace.records) {
    table.add_row({static_cast<std::int64_t>(r.iteration), r.j_exact, r.loss_mean, r.mean_reward,
                   r.entropy, r.div_to_old, r.div_to_ref, r.grad_norm, r.ref_updated});
  }
  return table;
}

std::string trace_json(const TrainTrace& trace) {
  json j;
  j["iterations"] = trace.records.size();
  j["aborted"] = trace.aborted;
  j["diagnostic"] = trace.diagnostic;
  j["final_logits"] = trace.final_logits;
  if (!trace.records.empty()) {
    const IterationRecord& last = trace.records.back();
    j["final_j_exact"] = last.j_exact;
    j["final_entropy"] = last.entropy;
  }
  j["records"] = json::parse(trace_table(trace).to_json());
  return j.dump(2) + "\n";
}

std::string audit_report_json(const AuditReport& r) {
  json j;
  j["uncorrected_grad"] = r.uncorrected_grad;
  j["corrected_grad"] = r.corrected_grad;
  j["true_ukl_grad"] = r.true_ukl_grad;
  j["bias_norm"] = r.bias_norm;
  j["bias_linf"] = r.bias_linf;
  j["relative_bias"] = r.relative_bias;
  j["corrected_error_linf"] = r.corrected_error_linf;
  j["corrected_consistent"] = r.corrected_consistent;
  return j.dump(2) + "\n";
}

}  // namespace rpg
