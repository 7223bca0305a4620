#include "brcat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace brcat {

void Dataset::validate() const {
  if (k() < 2) throw ParseError("dataset: needs at least 2 categories");
  if (static_cast<int>(category_labels.size()) != k())
    throw ParseError("dataset: category label count mismatch");
  if (x.rows() != y.rows()) throw ParseError("dataset: covariate/count row mismatch");
  for (int i = 0; i < n(); ++i) {
    double m = 0.0;
    for (int j = 0; j < k(); ++j) {
      const double c = y(i, j);
      if (c < 0.0 || c != std::floor(c))
        throw ParseError("dataset: negative or non-integer count in row " + std::to_string(i + 1));
      m += c;
    }
    if (m < 1.0) throw ParseError("dataset: empty count vector in row " + std::to_string(i + 1));
    if (std::fabs(m - totals[i]) > 1e-9)
      throw ParseError("dataset: total mismatch in row " + std::to_string(i + 1));
  }
}

namespace {

// One CSV record; handles quoted fields, embedded commas/quotes/newlines.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false, any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c == '\r') {
      // swallow; newline handling below
    } else if (c == '\n') {
      fields.push_back(field);
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(field);
  return true;
}

double parse_number(const std::string& s, int row, const std::string& col) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("row " + std::to_string(row) + ": cannot parse '" + s + "' in column " + col);
  }
}

int column_index(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("missing column '" + name + "'");
  return static_cast<int>(it - header.begin());
}

}  // namespace

Dataset parse_dataset(std::istream& in, const CsvSchema& schema) {
  const bool wide = !schema.count_columns.empty();
  if (wide == !schema.label_column.empty())
    throw ParseError("schema: exactly one of count columns or label column required");

  std::vector<std::string> header;
  if (!read_record(in, header)) throw ParseError("empty input");

  std::vector<int> cov_idx;
  for (const auto& nm : schema.covariate_columns) cov_idx.push_back(column_index(header, nm));

  std::vector<int> count_idx;
  int label_idx = -1;
  std::vector<std::string> labels = schema.categories;
  if (wide) {
    for (const auto& nm : schema.count_columns) count_idx.push_back(column_index(header, nm));
    if (labels.empty()) labels = schema.count_columns;
  } else {
    label_idx = column_index(header, schema.label_column);
  }

  const int p = static_cast<int>(cov_idx.size());
  struct Row {
    std::vector<double> x;
    std::vector<double> counts;
  };
  std::vector<Row> rows;
  std::map<std::vector<double>, int> pattern;  // covariate pattern -> row index

  // For long format without a fixed category list, collect raw records first.
  std::vector<std::pair<std::vector<double>, std::string>> long_records;

  std::vector<std::string> fields;
  int lineno = 1;
  while (read_record(in, fields)) {
    ++lineno;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    std::vector<double> xv(p);
    for (int l = 0; l < p; ++l) xv[l] = parse_number(fields[cov_idx[l]], lineno, header[cov_idx[l]]);

    if (wide) {
      std::vector<double> cv(count_idx.size());
      for (size_t j = 0; j < count_idx.size(); ++j) {
        cv[j] = parse_number(fields[count_idx[j]], lineno, header[count_idx[j]]);
        if (cv[j] < 0 || cv[j] != std::floor(cv[j]))
          throw ParseError("row " + std::to_string(lineno) + ": negative or non-integer count in column " +
                           header[count_idx[j]]);
      }
      auto [it, inserted] = pattern.try_emplace(xv, static_cast<int>(rows.size()));
      if (inserted) rows.push_back({xv, cv});
      else
        for (size_t j = 0; j < cv.size(); ++j) rows[it->second].counts[j] += cv[j];
    } else {
      std::string lab = fields[label_idx];
      if (!labels.empty() && std::find(labels.begin(), labels.end(), lab) == labels.end())
        throw ParseError("row " + std::to_string(lineno) + ": unknown category label '" + lab + "'");
      long_records.emplace_back(std::move(xv), std::move(lab));
    }
  }

  if (!wide) {
    if (labels.empty()) {
      for (const auto& r : long_records) labels.push_back(r.second);
      std::sort(labels.begin(), labels.end());
      labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    }
    for (const auto& [xv, lab] : long_records) {
      auto lit = std::find(labels.begin(), labels.end(), lab);
      const int j = static_cast<int>(lit - labels.begin());
      auto [it, inserted] = pattern.try_emplace(xv, static_cast<int>(rows.size()));
      if (inserted) rows.push_back({xv, std::vector<double>(labels.size(), 0.0)});
      rows[it->second].counts[j] += 1.0;
    }
  }

  if (rows.empty()) throw ParseError("no data rows");
  const int n = static_cast<int>(rows.size());
  const int k = static_cast<int>(labels.size());
  if (k < 2) throw ParseError("fewer than 2 categories");

  Dataset d;
  d.x.resize(n, p);
  d.y.resize(n, k);
  d.totals.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < p; ++l) d.x(i, l) = rows[i].x[l];
    double m = 0;
    for (int j = 0; j < k; ++j) {
      d.y(i, j) = rows[i].counts[j];
      m += rows[i].counts[j];
    }
    d.totals[i] = m;
  }
  d.category_labels = labels;
  d.covariate_names = schema.covariate_columns;
  d.validate();
  return d;
}

Dataset load_dataset(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_dataset(in, schema);
}

}  // namespace brcat
