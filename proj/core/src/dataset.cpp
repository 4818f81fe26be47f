#include "sketchls/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sketchls {

Eigen::MatrixXd Dataset::stacked() const {
  Eigen::MatrixXd a(n(), p() + 1);
  a.col(0) = y;
  a.rightCols(p()) = X;
  return a;
}

double rank_threshold(const Eigen::MatrixXd& m, double sigma_max) {
  return static_cast<double>(std::max(m.rows(), m.cols())) * sigma_max * 1e-12;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t' ||
                           *(last - 1) == '\r'))
    --last;
  double value = 0.0;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ParseError("non-numeric cell at row " + std::to_string(row) +
                     ", column " + std::to_string(col + 1) + ": '" + cell + "'");
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& response,
                 bool add_intercept) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_line(line);
  if (header.size() < 2)
    throw ParseError("need at least 2 columns, got " +
                     std::to_string(header.size()));

  std::ptrdiff_t response_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    std::string h = header[j];
    while (!h.empty() && (h.back() == ' ' || h.back() == '\r')) h.pop_back();
    if (h == response) response_col = static_cast<std::ptrdiff_t>(j);
  }
  if (response_col < 0)
    throw ParseError("response column '" + response + "' not found in header");

  std::vector<std::vector<double>> rows;
  std::size_t row_index = 1;  // 1-based, header is row 0
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw ParseError("row " + std::to_string(row_index) + " has " +
                       std::to_string(cells.size()) + " fields, expected " +
                       std::to_string(header.size()));
    std::vector<double> parsed(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j)
      parsed[j] = parse_cell(cells[j], row_index, j);
    rows.push_back(std::move(parsed));
    ++row_index;
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p_raw = static_cast<Eigen::Index>(header.size()) - 1;
  const Eigen::Index p = p_raw + (add_intercept ? 1 : 0);

  Eigen::VectorXd y(n);
  Eigen::MatrixXd X(n, p);
  std::vector<std::string> names;
  if (add_intercept) names.emplace_back("(intercept)");
  for (std::size_t j = 0; j < header.size(); ++j)
    if (static_cast<std::ptrdiff_t>(j) != response_col)
      names.push_back(header[j]);

  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index col = add_intercept ? 1 : 0;
    if (add_intercept) X(i, 0) = 1.0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (static_cast<std::ptrdiff_t>(j) == response_col)
        y[i] = rows[i][j];
      else
        X(i, col++) = rows[i][j];
    }
  }

  if (n <= p)
    throw DataError("need n > p, got n=" + std::to_string(n) +
                    ", p=" + std::to_string(p));
  return make_dataset(std::move(y), std::move(X), std::move(names));
}

Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd X,
                     std::vector<std::string> names) {
  if (y.size() != X.rows()) throw DataError("y length must match rows of X");
  if (X.rows() <= X.cols())
    throw DataError("need n > p, got n=" + std::to_string(X.rows()) +
                    ", p=" + std::to_string(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    if (X.col(j).cwiseAbs().maxCoeff() == 0.0)
      throw DataError("column " + std::to_string(j) + " of X is all zero");
  if (names.empty()) {
    names.reserve(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      names.push_back("x" + std::to_string(j + 1));
  }
  return Dataset{std::move(y), std::move(X), std::move(names)};
}

FitSummary fit_full(const Dataset& d) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(d.X,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double thresh = rank_threshold(d.X, sv[0]);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > thresh) ++rank;
  if (rank < d.p())
    throw DataError("X is rank deficient: numerical rank " +
                    std::to_string(rank) + " < p = " + std::to_string(d.p()));

  FitSummary fs;
  fs.beta_f = svd.solve(d.y);
  const Eigen::VectorXd fitted = d.X * fs.beta_f;
  fs.tss = d.y.squaredNorm();
  fs.rss = (d.y - fitted).squaredNorm();
  fs.mss = fitted.squaredNorm();
  fs.r_squared = (fs.tss > 0.0) ? fs.mss / fs.tss : 0.0;
  fs.sigma_min_x = sv[sv.size() - 1];
  return fs;
}

LeverageProfile leverage_scores(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double thresh = rank_threshold(m, sv[0]);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > thresh) ++rank;
  if (rank < m.cols())
    throw DataError("rank deficient matrix: numerical rank " +
                    std::to_string(rank) + " < " + std::to_string(m.cols()));

  LeverageProfile lp;
  lp.scores = svd.matrixU().rowwise().squaredNorm();
  lp.max_score = lp.scores.maxCoeff();
  lp.sum_scores = lp.scores.sum();
  return lp;
}

LeverageProfile leverage_profile(const Dataset& d, LeverageTarget which) {
  return which == LeverageTarget::design_only ? leverage_scores(d.X)
                                              : leverage_scores(d.stacked());
}

}  // namespace sketchls
