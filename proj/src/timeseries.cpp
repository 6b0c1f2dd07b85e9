#include "hydroens/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "hydroens/errors.hpp"
#include "hydroens/util.hpp"

namespace hydroens {

HydroSeries::HydroSeries(HourStamp start, std::vector<double> values, std::vector<std::uint8_t> mask)
    : start_(start), values_(std::move(values)), mask_(std::move(mask)) {
    if (mask_.empty()) mask_.assign(values_.size(), 1);
    if (mask_.size() != values_.size()) throw ValidationError("HydroSeries: mask length differs from values");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (mask_[i]) {
            if (!std::isfinite(values_[i]))
                throw ValidationError("HydroSeries: non-finite observed value at " + time(i).to_string());
        } else {
            values_[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
}

HydroSeries HydroSeries::from_timestamps(std::span<const HourStamp> times, std::vector<double> values,
                                         std::vector<std::uint8_t> mask) {
    if (times.size() != values.size()) throw ValidationError("HydroSeries: timestamp count differs from values");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] - times[i - 1] != 1)
            throw ValidationError("HydroSeries: timestamps not hourly at " + times[i].to_string());
    return HydroSeries(times.empty() ? HourStamp{} : times.front(), std::move(values), std::move(mask));
}

std::size_t HydroSeries::masked_count() const noexcept {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{0}));
}

std::optional<std::size_t> HydroSeries::index_of(HourStamp t) const noexcept {
    if (!contains(t)) return std::nullopt;
    return static_cast<std::size_t>(t - start_);
}

HydroSeries HydroSeries::shifted(std::int64_t hours) const {
    HydroSeries out = *this;
    out.start_ = start_ + hours;
    return out;
}

HydroSeries HydroSeries::slice(HourStamp from, HourStamp to) const {
    if (from > to || !contains(from) || !contains(to))
        throw RangeError("slice [" + from.to_string() + ", " + to.to_string() + "] outside series range");
    const auto a = static_cast<std::size_t>(from - start_);
    const auto b = static_cast<std::size_t>(to - start_) + 1;
    return HydroSeries(from, std::vector<double>(values_.begin() + a, values_.begin() + b),
                       std::vector<std::uint8_t>(mask_.begin() + a, mask_.begin() + b));
}

FloodBatchSet::FloodBatchSet(std::vector<FloodTerm> terms) : terms_(std::move(terms)) {
    std::set<int> ids;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        const auto& t = terms_[i];
        if (t.start > t.end) throw ValidationError("flood term " + std::to_string(t.id) + ": start after end");
        if (!ids.insert(t.id).second) throw ValidationError("duplicate flood term id " + std::to_string(t.id));
        if (i > 0 && terms_[i - 1].end >= t.start)
            throw ValidationError("flood terms " + std::to_string(terms_[i - 1].id) + " and " + std::to_string(t.id) +
                                  " overlap or are out of order");
    }
}

std::size_t FloodBatchSet::total_samples() const noexcept {
    std::size_t n = 0;
    for (const auto& t : terms_) n += t.size();
    return n;
}

std::optional<std::size_t> FloodBatchSet::locate(HourStamp t) const noexcept {
    auto it = std::upper_bound(terms_.begin(), terms_.end(), t,
                               [](HourStamp v, const FloodTerm& term) { return v < term.start; });
    if (it == terms_.begin()) return std::nullopt;
    --it;
    if (!it->contains(t)) return std::nullopt;
    return static_cast<std::size_t>(it - terms_.begin());
}

bool FloodBatchSet::overlaps(const FloodBatchSet& other) const noexcept {
    for (const auto& a : terms_)
        for (const auto& b : other.terms_)
            if (a.start <= b.end && b.start <= a.end) return true;
    return false;
}

std::size_t AlignedTable::flagged_count() const noexcept {
    return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), std::uint8_t{1}));
}

AlignedTable align(std::span<const HydroSeries> series) {
    if (series.empty()) throw AlignmentError("align: no series given");
    HourStamp lo = series.front().start();
    HourStamp hi = series.front().last();
    for (const auto& s : series) {
        if (s.empty()) throw AlignmentError("align: empty series");
        lo = std::max(lo, s.start());
        hi = std::min(hi, s.last());
    }
    if (lo > hi) throw AlignmentError("align: time ranges do not intersect");

    AlignedTable table;
    table.start = lo;
    table.rows = static_cast<std::size_t>(hi - lo + 1);
    table.flagged.assign(table.rows, 0);
    table.columns.reserve(series.size());
    for (const auto& s : series) {
        const auto offset = static_cast<std::size_t>(lo - s.start());
        std::vector<double> col(table.rows);
        for (std::size_t r = 0; r < table.rows; ++r) {
            col[r] = s.value(offset + r);
            if (!s.observed(offset + r)) table.flagged[r] = 1;
        }
        table.columns.push_back(std::move(col));
    }
    return table;
}

std::vector<std::vector<double>> slice_terms(const HydroSeries& series, const FloodBatchSet& terms) {
    std::vector<std::vector<double>> out;
    out.reserve(terms.size());
    for (const auto& term : terms) {
        if (!series.contains(term.start) || !series.contains(term.end))
            throw RangeError("flood term " + std::to_string(term.id) + " outside series range");
        const auto a = static_cast<std::size_t>(term.start - series.start());
        auto vals = series.values().subspan(a, term.size());
        out.emplace_back(vals.begin(), vals.end());
    }
    return out;
}

DesignMatrix::DesignMatrix(std::vector<std::string> column_names, std::vector<std::uint8_t> dummy,
                           Eigen::MatrixXd X, Eigen::VectorXd y, Eigen::VectorXd w, std::vector<int> term_of_row,
                           std::vector<HourStamp> time_of_row)
    : names_(std::move(column_names)),
      dummy_(std::move(dummy)),
      X_(std::move(X)),
      y_(std::move(y)),
      w_(std::move(w)),
      term_of_row_(std::move(term_of_row)),
      time_of_row_(std::move(time_of_row)) {
    const auto n = X_.rows();
    if (dummy_.empty()) dummy_.assign(names_.size(), 0);
    if (static_cast<Eigen::Index>(names_.size()) != X_.cols() || dummy_.size() != names_.size())
        throw ValidationError("DesignMatrix: column names do not match X");
    if (y_.size() != n || w_.size() != n || static_cast<Eigen::Index>(term_of_row_.size()) != n)
        throw ValidationError("DesignMatrix: row counts of X, y, w, term ids differ");
    if (!time_of_row_.empty() && static_cast<Eigen::Index>(time_of_row_.size()) != n)
        throw ValidationError("DesignMatrix: row timestamps do not match X");
    std::set<std::string> seen;
    for (const auto& name : names_)
        if (!seen.insert(name).second) throw ValidationError("DesignMatrix: duplicate column " + name);
    if (n > 0) {
        if ((w_.array() < 0.0).any() || !w_.allFinite()) throw ValidationError("DesignMatrix: negative weight");
        if (!(w_.array() > 0.0).any()) throw ValidationError("DesignMatrix: all weights are zero");
    }
    if (n > 1) {
        for (Eigen::Index j = 0; j < X_.cols(); ++j) {
            if (dummy_[static_cast<std::size_t>(j)]) continue;
            if ((X_.col(j).array() == X_(0, j)).all())
                throw ValidationError("DesignMatrix: column " + names_[static_cast<std::size_t>(j)] + " is constant");
        }
    }
}

DesignMatrix DesignMatrix::with_weights(Eigen::VectorXd w) const {
    return DesignMatrix(names_, dummy_, X_, y_, std::move(w), term_of_row_, time_of_row_);
}

std::string DesignMatrix::fingerprint() const {
    std::uint64_t h = fnv1a(std::string_view{"design"});
    for (const auto& name : names_) h = fnv1a(name, h);
    h = fnv1a(X_, h);
    h = fnv1a(y_, h);
    h = fnv1a(w_, h);
    for (int t : term_of_row_) h = fnv1a(std::as_bytes(std::span(&t, 1)), h);
    return hex64(h);
}

}  // namespace hydroens
