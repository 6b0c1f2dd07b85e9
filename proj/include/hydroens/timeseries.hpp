#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hydroens/time.hpp"

namespace hydroens {

/// Hourly scalar series with an observation mask. Timestamps are implied by
/// `start` and strictly 1 h apart; missing data lives in the mask, never as gaps.
/// Masked positions hold NaN.
class HydroSeries {
public:
    HydroSeries() = default;
    /// `mask` empty means every value is observed. Throws ValidationError when an
    /// observed value is not finite or the mask length differs.
    HydroSeries(HourStamp start, std::vector<double> values, std::vector<std::uint8_t> mask = {});

    /// Builds from explicit timestamps; rejects anything but exact 1-hour spacing.
    static HydroSeries from_timestamps(std::span<const HourStamp> times, std::vector<double> values,
                                       std::vector<std::uint8_t> mask = {});

    HourStamp start() const noexcept { return start_; }
    /// Last timestamp (inclusive). Undefined for an empty series.
    HourStamp last() const noexcept { return start_ + static_cast<std::int64_t>(values_.size()) - 1; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    HourStamp time(std::size_t i) const noexcept { return start_ + static_cast<std::int64_t>(i); }
    double value(std::size_t i) const noexcept { return values_[i]; }
    bool observed(std::size_t i) const noexcept { return mask_[i] != 0; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const std::uint8_t> mask() const noexcept { return mask_; }
    std::size_t masked_count() const noexcept;

    bool contains(HourStamp t) const noexcept { return !empty() && t >= start_ && t <= last(); }
    std::optional<std::size_t> index_of(HourStamp t) const noexcept;

    /// Same values, every timestamp moved by `hours`.
    HydroSeries shifted(std::int64_t hours) const;
    /// Inclusive sub-range; throws RangeError when outside.
    HydroSeries slice(HourStamp from, HourStamp to) const;

private:
    HourStamp start_{};
    std::vector<double> values_;
    std::vector<std::uint8_t> mask_;
};

/// Contiguous hourly window [start, end] (inclusive) that forms one flood batch.
struct FloodTerm {
    int id = 0;
    HourStamp start{};
    HourStamp end{};

    std::size_t size() const noexcept { return static_cast<std::size_t>(end - start + 1); }
    bool contains(HourStamp t) const noexcept { return t >= start && t <= end; }
};

/// Ordered, pairwise-disjoint list of flood terms.
class FloodBatchSet {
public:
    FloodBatchSet() = default;
    /// Throws ValidationError if any term has start > end, ids repeat, or terms overlap / are unordered.
    explicit FloodBatchSet(std::vector<FloodTerm> terms);

    std::size_t size() const noexcept { return terms_.size(); }
    bool empty() const noexcept { return terms_.empty(); }
    const FloodTerm& operator[](std::size_t i) const noexcept { return terms_[i]; }
    auto begin() const noexcept { return terms_.begin(); }
    auto end() const noexcept { return terms_.end(); }
    const std::vector<FloodTerm>& terms() const noexcept { return terms_; }

    /// Σ N_b.
    std::size_t total_samples() const noexcept;
    /// Position (not id) of the term containing t.
    std::optional<std::size_t> locate(HourStamp t) const noexcept;
    bool overlaps(const FloodBatchSet& other) const noexcept;

private:
    std::vector<FloodTerm> terms_;
};

/// Co-indexed rows over the intersection of several series.
struct AlignedTable {
    HourStamp start{};
    std::size_t rows = 0;
    std::vector<std::vector<double>> columns;  // one per input series, input order
    std::vector<std::uint8_t> flagged;         // 1 when any input is masked at that row

    std::size_t flagged_count() const noexcept;
};

/// Intersects the time ranges of `series`; throws AlignmentError when empty.
AlignedTable align(std::span<const HydroSeries> series);

/// Per-term value vectors (masked samples as NaN), in term order.
/// Throws RangeError when a term is not inside the series range.
std::vector<std::vector<double>> slice_terms(const HydroSeries& series, const FloodBatchSet& terms);

/// Regression design: rows are hourly samples, columns named predictors.
class DesignMatrix {
public:
    DesignMatrix() = default;
    /// Validates: unique column names, shapes, w >= 0 with at least one w > 0,
    /// no constant column unless it is flagged dummy.
    DesignMatrix(std::vector<std::string> column_names, std::vector<std::uint8_t> dummy, Eigen::MatrixXd X,
                 Eigen::VectorXd y, Eigen::VectorXd w, std::vector<int> term_of_row,
                 std::vector<HourStamp> time_of_row = {});

    const std::vector<std::string>& column_names() const noexcept { return names_; }
    const std::vector<std::uint8_t>& dummy() const noexcept { return dummy_; }
    const Eigen::MatrixXd& X() const noexcept { return X_; }
    const Eigen::VectorXd& y() const noexcept { return y_; }
    const Eigen::VectorXd& w() const noexcept { return w_; }
    const std::vector<int>& term_of_row() const noexcept { return term_of_row_; }
    const std::vector<HourStamp>& time_of_row() const noexcept { return time_of_row_; }
    Eigen::Index rows() const noexcept { return X_.rows(); }
    Eigen::Index cols() const noexcept { return X_.cols(); }

    /// Copy with a different weight vector (re-validated).
    DesignMatrix with_weights(Eigen::VectorXd w) const;
    /// Stable hash of names, X, y, w and term ids.
    std::string fingerprint() const;

private:
    std::vector<std::string> names_;
    std::vector<std::uint8_t> dummy_;
    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;
    Eigen::VectorXd w_;
    std::vector<int> term_of_row_;
    std::vector<HourStamp> time_of_row_;
};

}  // namespace hydroens
