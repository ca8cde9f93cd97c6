#include "blupcal/csv_io.hpp"

#include "blupcal/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <unordered_map>

namespace blupcal {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool is_missing(const std::string& field) { return field.empty() || field == "NA" || field == "nan"; }

double parse_double(const std::string& field, const std::string& where) {
  if (is_missing(field)) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError(where + ": cannot parse number '" + field + "'");
  return v;
}

std::string where(const std::string& source, int line) {
  return source + ":" + std::to_string(line);
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return static_cast<int>(k);
  return -1;
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (table.header.empty()) {
      if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      throw DataError(where(source, line_no) + ": expected " + std::to_string(table.header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) throw DataError(source + ": empty file");
  return table;
}

ReplicatePanel read_replicates(std::istream& in, const std::string& source) {
  const CsvTable table = read_csv(in, source);
  if (table.header != std::vector<std::string>{"subject_id", "replicate_index", "value"})
    throw DataError(source + ": replicates header must be 'subject_id,replicate_index,value'");

  std::vector<std::string> ids;
  std::unordered_map<std::string, int> index_of;
  std::vector<std::map<int, double>> cells;
  int max_index = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string at = where(source, table.line_numbers[r]);
    if (row[0].empty()) throw DataError(at + ": empty subject_id");
    int rep = 0;
    auto [ptr, ec] = std::from_chars(row[1].data(), row[1].data() + row[1].size(), rep);
    if (ec != std::errc() || ptr != row[1].data() + row[1].size() || rep < 1)
      throw DataError(at + ": replicate_index must be a positive integer, got '" + row[1] + "'");
    auto [it, inserted] = index_of.emplace(row[0], static_cast<int>(ids.size()));
    if (inserted) {
      ids.push_back(row[0]);
      cells.emplace_back();
    }
    auto& subject = cells[it->second];
    if (subject.contains(rep))
      throw DataError(at + ": duplicate (subject, replicate) key (" + row[0] + ", " + row[1] + ")");
    subject[rep] = parse_double(row[2], at);
    max_index = std::max(max_index, rep);
  }
  if (ids.empty()) throw DataError(source + ": no replicate rows");

  const auto n = static_cast<Eigen::Index>(ids.size());
  MatrixXd values = MatrixXd::Zero(n, max_index);
  MaskMatrix mask = MaskMatrix::Constant(n, max_index, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    bool any = false;
    for (const auto& [rep, v] : cells[i]) {
      if (std::isnan(v)) continue;
      values(i, rep - 1) = v;
      mask(i, rep - 1) = true;
      any = true;
    }
    if (!any)
      throw DataError(source + ": subject '" + ids[i] + "' has zero observed replicates");
  }
  return ReplicatePanel(std::move(ids), std::move(values), std::move(mask));
}

ReplicatePanel read_replicates_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open replicates file '" + path + "'");
  return read_replicates(in, path);
}

std::string format_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_replicates(const ReplicatePanel& panel, std::ostream& out) {
  out << "subject_id,replicate_index,value\n";
  for (int i = 0; i < panel.n(); ++i)
    for (int j = 0; j < panel.max_replicates(); ++j)
      if (panel.observed()(i, j))
        out << panel.subject_ids()[i] << ',' << (j + 1) << ',' << format_exact(panel.values()(i, j))
            << '\n';
}

OutcomePanel read_outcomes(std::istream& in, const std::string& outcome,
                           const std::vector<std::string>& covariates, const std::string& source) {
  const CsvTable table = read_csv(in, source);
  if (table.header.empty() || table.header[0] != "subject_id")
    throw DataError(source + ": first outcomes column must be 'subject_id'");
  const int y_col = table.column(outcome);
  if (y_col < 0) throw DataError(source + ": unknown column '" + outcome + "'");
  std::vector<int> c_cols;
  for (const auto& name : covariates) {
    const int c = table.column(name);
    if (c < 0) throw DataError(source + ": unknown column '" + name + "'");
    c_cols.push_back(c);
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  std::vector<std::string> ids;
  std::unordered_map<std::string, int> seen;
  VectorXd y(n);
  MatrixXd c(n, static_cast<Eigen::Index>(c_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    const std::string at = where(source, table.line_numbers[i]);
    if (!seen.emplace(row[0], 1).second) throw DataError(at + ": duplicate subject_id '" + row[0] + "'");
    ids.push_back(row[0]);
    y(i) = parse_double(row[y_col], at);
    for (std::size_t k = 0; k < c_cols.size(); ++k)
      c(i, static_cast<Eigen::Index>(k)) = parse_double(row[c_cols[k]], at);
  }
  return OutcomePanel(std::move(ids), std::move(y), std::move(c), covariates);
}

OutcomePanel read_outcomes_file(const std::string& path, const std::string& outcome,
                                const std::vector<std::string>& covariates) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open outcomes file '" + path + "'");
  return read_outcomes(in, outcome, covariates, path);
}

AlignedPanels align_panels(const ReplicatePanel& replicates, const OutcomePanel& outcomes) {
  std::unordered_map<std::string, int> outcome_row;
  for (int i = 0; i < outcomes.n(); ++i) outcome_row.emplace(outcomes.subject_ids()[i], i);
  std::vector<int> rep_rows, out_rows;
  for (int i = 0; i < replicates.n(); ++i) {
    auto it = outcome_row.find(replicates.subject_ids()[i]);
    if (it == outcome_row.end()) continue;
    rep_rows.push_back(i);
    out_rows.push_back(it->second);
  }
  if (rep_rows.empty()) throw DataError("replicates and outcomes share no subject ids");
  AlignedPanels out{replicates.select_rows(rep_rows), outcomes.select_rows(out_rows), 0, 0};
  out.dropped_replicate_only = replicates.n() - static_cast<int>(rep_rows.size());
  out.dropped_outcome_only = outcomes.n() - static_cast<int>(out_rows.size());
  return out;
}

}  // namespace blupcal
