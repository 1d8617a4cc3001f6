#include "svpl/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "svpl/errors.hpp"

namespace svpl::csv {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, const std::string& context) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    require(used == cell.size(), ErrorCode::Io, "csv: trailing characters in " + context);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    raise(ErrorCode::Io, "csv: cannot parse '" + cell + "' in " + context);
  }
}

}  // namespace

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct Writer::Impl {
  std::ofstream out;
};

Writer::Writer(const std::string& path) : impl_(new Impl) {
  impl_->out.open(path, std::ios::binary);
  if (!impl_->out) {
    delete impl_;
    raise(ErrorCode::Io, "csv: cannot open for writing: " + path);
  }
}

Writer::~Writer() { delete impl_; }

void Writer::header(const std::vector<std::string>& columns) { row(columns); }

void Writer::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << cells[i];
  }
  impl_->out << '\n';
}

void Writer::flush() { impl_->out.flush(); }

void Writer::close() {
  impl_->out.close();
  require(static_cast<bool>(impl_->out) || impl_->out.eof(), ErrorCode::Io,
          "csv: write failed");
}

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

Table read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "csv: cannot open: " + path);
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      table.columns = split_line(line);
      first = false;
    } else {
      table.rows.push_back(split_line(line));
    }
  }
  require(!first, ErrorCode::Io, "csv: empty file: " + path);
  return table;
}

void write_dataset(const Dataset& ds, const std::string& data_path,
                   const std::optional<std::string>& oracle_path) {
  const int d = ds.covariates();
  const int K = ds.num_arms();
  const bool with_po = ds.has_oracle() && ds.oracle().potential_outcomes.has_value();

  Writer w(data_path);
  std::vector<std::string> cols;
  for (int j = 0; j < d; ++j) cols.push_back("x" + std::to_string(j + 1));
  cols.emplace_back("a");
  cols.emplace_back("y");
  if (with_po) {
    for (int a = 0; a < K; ++a) cols.push_back("y" + std::to_string(a + 1));
  }
  w.header(cols);

  std::vector<std::string> cells;
  for (int i = 0; i < ds.rows(); ++i) {
    cells.clear();
    for (int j = 0; j < d; ++j) cells.push_back(format_value(ds.X()(i, j)));
    cells.push_back(std::to_string(ds.A()[static_cast<std::size_t>(i)] + 1));
    cells.push_back(format_value(ds.Y()[i]));
    if (with_po) {
      const auto& po = *ds.oracle().potential_outcomes;
      for (int a = 0; a < K; ++a) cells.push_back(format_value(po(i, a)));
    }
    w.row(cells);
  }
  w.close();

  if (!oracle_path) return;
  require(ds.has_oracle(), ErrorCode::OracleRequired,
          "write_dataset: oracle file requested but dataset has no oracle");
  const OracleTruth& oracle = ds.oracle();
  const bool with_xi = oracle.secondary_mu.has_value();

  Writer ow(*oracle_path);
  std::vector<std::string> ocols{"row"};
  for (int a = 0; a < K; ++a) ocols.push_back("pistar_" + std::to_string(a + 1));
  for (int a = 0; a < K; ++a) ocols.push_back("mu_" + std::to_string(a + 1));
  if (with_xi) {
    for (int a = 0; a < K; ++a) ocols.push_back("xi_mu_" + std::to_string(a + 1));
    for (int a = 0; a < K; ++a) ocols.push_back("xi_" + std::to_string(a + 1));
  }
  ow.header(ocols);
  for (int i = 0; i < ds.rows(); ++i) {
    cells.clear();
    cells.push_back(std::to_string(i));
    const TreatmentSet& opt = oracle.optimal_sets[static_cast<std::size_t>(i)];
    for (Arm a = 0; a < K; ++a) cells.push_back(opt.contains(a) ? "1" : "0");
    for (int a = 0; a < K; ++a) cells.push_back(format_value(oracle.mu(i, a)));
    if (with_xi) {
      for (int a = 0; a < K; ++a) cells.push_back(format_value((*oracle.secondary_mu)(i, a)));
      for (int a = 0; a < K; ++a)
        cells.push_back(format_value((*oracle.secondary_outcomes)(i, a)));
    }
    ow.row(cells);
  }
  ow.close();
}

Dataset read_dataset(const std::string& data_path,
                     const std::optional<std::string>& oracle_path) {
  Table table = read_table(data_path);
  int d = 0;
  while (table.column("x" + std::to_string(d + 1)) == static_cast<int>(d)) ++d;
  require(d >= 1, ErrorCode::Io, "read_dataset: no covariate columns");
  const int col_a = table.column("a");
  const int col_y = table.column("y");
  require(col_a == d && col_y == d + 1, ErrorCode::Io,
          "read_dataset: expected columns x1..xd,a,y");

  int K_po = 0;
  while (table.column("y" + std::to_string(K_po + 1)) >= 0) ++K_po;

  const int n = static_cast<int>(table.rows.size());
  require(n > 0, ErrorCode::Io, "read_dataset: no data rows");

  Eigen::MatrixXd X(n, d);
  std::vector<Arm> A(static_cast<std::size_t>(n));
  Eigen::VectorXd Y(n);
  Eigen::MatrixXd po;
  if (K_po > 0) po.resize(n, K_po);

  Arm max_arm = 0;
  for (int i = 0; i < n; ++i) {
    const auto& cells = table.rows[static_cast<std::size_t>(i)];
    require(static_cast<int>(cells.size()) >= d + 2, ErrorCode::Io,
            "read_dataset: short row " + std::to_string(i));
    for (int j = 0; j < d; ++j) X(i, j) = parse_double(cells[static_cast<std::size_t>(j)], "x");
    double a_val = parse_double(cells[static_cast<std::size_t>(col_a)], "a");
    A[static_cast<std::size_t>(i)] = static_cast<Arm>(a_val) - 1;  // to 0-based
    max_arm = std::max(max_arm, A[static_cast<std::size_t>(i)]);
    Y[i] = parse_double(cells[static_cast<std::size_t>(col_y)], "y");
    for (int a = 0; a < K_po; ++a) {
      po(i, a) = parse_double(cells[static_cast<std::size_t>(d + 2 + a)], "y_a");
    }
  }
  int K = K_po > 0 ? K_po : max_arm + 1;

  std::optional<OracleTruth> oracle;
  if (oracle_path) {
    Table ot = read_table(*oracle_path);
    require(static_cast<int>(ot.rows.size()) == n, ErrorCode::LengthMismatch,
            "read_dataset: oracle row count differs from data");
    int K_oracle = 0;
    while (ot.column("pistar_" + std::to_string(K_oracle + 1)) >= 0) ++K_oracle;
    require(K_oracle >= 2, ErrorCode::Io, "read_dataset: oracle file lacks pistar columns");
    K = std::max(K, K_oracle);

    OracleTruth truth;
    truth.mu.resize(n, K_oracle);
    truth.optimal_sets.reserve(static_cast<std::size_t>(n));
    const bool with_xi = ot.column("xi_mu_1") >= 0;
    if (with_xi) {
      truth.secondary_mu = Eigen::MatrixXd(n, K_oracle);
      truth.secondary_outcomes = Eigen::MatrixXd(n, K_oracle);
    }
    const int base_flags = ot.column("pistar_1");
    const int base_mu = ot.column("mu_1");
    require(base_flags >= 0 && base_mu >= 0, ErrorCode::Io,
            "read_dataset: oracle file missing columns");
    for (int i = 0; i < n; ++i) {
      const auto& cells = ot.rows[static_cast<std::size_t>(i)];
      std::vector<Arm> members;
      for (int a = 0; a < K_oracle; ++a) {
        if (parse_double(cells[static_cast<std::size_t>(base_flags + a)], "pistar") != 0.0) {
          members.push_back(static_cast<Arm>(a));
        }
        truth.mu(i, a) = parse_double(cells[static_cast<std::size_t>(base_mu + a)], "mu");
      }
      truth.optimal_sets.emplace_back(std::move(members), K_oracle);
      if (with_xi) {
        const int base_xi_mu = ot.column("xi_mu_1");
        const int base_xi = ot.column("xi_1");
        for (int a = 0; a < K_oracle; ++a) {
          (*truth.secondary_mu)(i, a) =
              parse_double(cells[static_cast<std::size_t>(base_xi_mu + a)], "xi_mu");
          (*truth.secondary_outcomes)(i, a) =
              parse_double(cells[static_cast<std::size_t>(base_xi + a)], "xi");
        }
      }
    }
    if (K_po > 0) truth.potential_outcomes = po;
    oracle = std::move(truth);
  }

  return Dataset(std::move(X), std::move(A), std::move(Y), K, std::move(oracle));
}

void write_sets(const std::vector<TreatmentSet>& sets, int num_arms,
                const std::string& path) {
  Writer w(path);
  std::vector<std::string> cols{"row"};
  for (int a = 0; a < num_arms; ++a) cols.push_back("member_" + std::to_string(a + 1));
  cols.emplace_back("cardinality");
  w.header(cols);
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    cells.clear();
    cells.push_back(std::to_string(i));
    for (Arm a = 0; a < num_arms; ++a) cells.push_back(sets[i].contains(a) ? "1" : "0");
    cells.push_back(std::to_string(sets[i].size()));
    w.row(cells);
  }
  w.close();
}

std::vector<TreatmentSet> read_sets(const std::string& path, int* num_arms_out) {
  Table table = read_table(path);
  int K = 0;
  while (table.column("member_" + std::to_string(K + 1)) >= 0) ++K;
  require(K >= 2, ErrorCode::Io, "read_sets: no membership columns");
  const int base = table.column("member_1");
  std::vector<TreatmentSet> sets;
  sets.reserve(table.rows.size());
  for (const auto& cells : table.rows) {
    std::vector<Arm> members;
    for (int a = 0; a < K; ++a) {
      if (parse_double(cells[static_cast<std::size_t>(base + a)], "member") != 0.0) {
        members.push_back(static_cast<Arm>(a));
      }
    }
    sets.emplace_back(std::move(members), K);
  }
  if (num_arms_out) *num_arms_out = K;
  return sets;
}

}  // namespace svpl::csv
