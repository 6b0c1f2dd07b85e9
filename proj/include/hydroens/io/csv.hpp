#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hydroens/ensemble.hpp"
#include "hydroens/features.hpp"
#include "hydroens/metrics.hpp"
#include "hydroens/sst_weights.hpp"
#include "hydroens/timeseries.hpp"

namespace hydroens::io {

/// Comma-separated text reader with 1-based line numbers. No quoting.
class CsvReader {
public:
    explicit CsvReader(const std::filesystem::path& path);

    const std::vector<std::string>& header() const noexcept { return header_; }
    /// Next data row; false at end of file. Blank lines are skipped.
    bool next(std::vector<std::string>& fields);
    std::size_t line() const noexcept { return line_; }
    const std::filesystem::path& path() const noexcept { return path_; }

    /// ParseError(line) unless the cell is a finite decimal number.
    double number(const std::string& cell) const;
    /// NaN for empty or "NA" cells; ParseError otherwise when not numeric.
    double number_or_missing(const std::string& cell, bool& missing) const;
    HourStamp timestamp(const std::string& cell) const;
    MonthKey month(const std::string& cell) const;
    int integer(const std::string& cell) const;

private:
    std::filesystem::path path_;
    std::vector<std::string> lines_;
    std::vector<std::string> header_;
    std::size_t cursor_ = 1;
    std::size_t line_ = 1;
};

std::vector<std::string> split_csv_line(const std::string& line);

/// `timestamp,<name>,...`; empty or NA cells are masked. Rows must be exactly
/// one hour apart (FormatError naming the gap).
std::map<std::string, HydroSeries> read_series_table(const std::filesystem::path& path);
void write_series_table(const std::filesystem::path& path, const std::map<std::string, HydroSeries>& series);

/// `timestamp,c0,...,c399`; strictly increasing, gaps allowed.
std::vector<GridField> read_grid(const std::filesystem::path& path);
void write_grid(const std::filesystem::path& path, const std::vector<GridField>& fields);

/// `month_id,z1,...,zK`.
std::vector<MonthlyFeature> read_features(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const std::vector<MonthlyFeature>& features);

/// `month_id,STW`.
WeightSeries read_weights(const std::filesystem::path& path, double epsilon = 1e-8);
void write_weights(const std::filesystem::path& path, const WeightSeries& weights);

/// `month_id,v1,v2,v3`.
void write_embedding(const std::filesystem::path& path, const std::vector<MonthKey>& months,
                     const Eigen::Ref<const Eigen::MatrixXd>& embedding);
std::pair<std::vector<MonthKey>, Eigen::MatrixXd> read_embedding(const std::filesystem::path& path);

/// `term_id,start,end`.
FloodBatchSet read_terms(const std::filesystem::path& path);
void write_terms(const std::filesystem::path& path, const FloodBatchSet& terms);

/// `term_id,model,alpha`. Rows for `term_ids` in order; models in first-seen order.
CoefficientSet read_coefficients(const std::filesystem::path& path, const std::vector<int>& term_ids);
void write_coefficients(const std::filesystem::path& path, const CoefficientSet& coeffs, const std::vector<int>& term_ids);

/// `term_id,model,l2_norm`.
void write_norm_table(const std::filesystem::path& path, const NormTable& table);

/// `method,weighting,term,fcd,rmse,mae,sim,norm_yhat,norm_y`; term "all" for pooled rows.
void write_skill_rows(const std::filesystem::path& path, const std::vector<SkillRow>& rows);

/// Per-term plot data: `timestamp,actual,<model>...,ensemble`, one file per term
/// named `plot_term_<id>.csv`. Returns the written paths.
std::vector<std::filesystem::path> emit_plotdata(const std::filesystem::path& dir, const std::vector<int>& term_ids,
                                                 const std::vector<std::vector<HourStamp>>& times,
                                                 const std::vector<Eigen::VectorXd>& actual,
                                                 const std::vector<std::string>& models,
                                                 const std::vector<std::vector<Eigen::VectorXd>>& per_model,
                                                 const std::vector<Eigen::VectorXd>& ensemble);

/// Long-format forecast table `timestamp,term_id,<col>...` keyed by term order.
struct TermTable {
    std::vector<std::string> columns;
    std::vector<int> term_ids;                      // per term
    std::vector<std::vector<HourStamp>> times;      // per term
    std::vector<std::vector<Eigen::VectorXd>> values;  // [column][term]

    const std::vector<Eigen::VectorXd>& column(const std::string& name) const;
};

void write_term_table(const std::filesystem::path& path, const TermTable& table);
TermTable read_term_table(const std::filesystem::path& path);

}  // namespace hydroens::io
