#include "hydroens/io/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "hydroens/errors.hpp"
#include "hydroens/util.hpp"

namespace hydroens::io {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

void expect_header(const CsvReader& r, std::size_t min_cols, const std::string& first) {
    const auto& h = r.header();
    if (h.size() < min_cols || h[0] != first)
        throw FormatError(r.path().string() + ": header must start with '" + first + "'", 1);
}

void expect_width(const CsvReader& r, const std::vector<std::string>& f) {
    if (f.size() != r.header().size())
        throw FormatError("expected " + std::to_string(r.header().size()) + " fields, found " +
                              std::to_string(f.size()),
                          r.line());
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return s.substr(i);
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

CsvReader::CsvReader(const fs::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string l;
    while (std::getline(in, l)) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
        lines_.push_back(std::move(l));
    }
    if (lines_.empty() || trim(lines_[0]).empty()) throw FormatError(path.string() + ": missing header", 1);
    header_ = split_csv_line(lines_[0]);
}

bool CsvReader::next(std::vector<std::string>& fields) {
    while (cursor_ < lines_.size()) {
        const std::string& l = lines_[cursor_++];
        line_ = cursor_;
        if (trim(l).empty()) continue;
        fields = split_csv_line(l);
        return true;
    }
    return false;
}

double CsvReader::number(const std::string& cell) const {
    double v = 0.0;
    const char* b = cell.data();
    const char* e = b + cell.size();
    if (!cell.empty() && *b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (cell.empty() || ec != std::errc{} || p != e || !std::isfinite(v))
        throw ParseError("not a finite number: '" + cell + "'", line_);
    return v;
}

double CsvReader::number_or_missing(const std::string& cell, bool& missing) const {
    missing = cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan";
    if (missing) return std::nan("");
    return number(cell);
}

HourStamp CsvReader::timestamp(const std::string& cell) const {
    auto t = HourStamp::parse(cell);
    if (!t) throw ParseError("bad timestamp '" + cell + "'", line_);
    return *t;
}

MonthKey CsvReader::month(const std::string& cell) const {
    auto m = MonthKey::parse(cell);
    if (!m) throw ParseError("bad month id '" + cell + "'", line_);
    return *m;
}

int CsvReader::integer(const std::string& cell) const {
    int v = 0;
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc{} || p != cell.data() + cell.size())
        throw ParseError("not an integer: '" + cell + "'", line_);
    return v;
}

std::map<std::string, HydroSeries> read_series_table(const fs::path& path) {
    CsvReader r(path);
    expect_header(r, 2, "timestamp");
    const std::size_t k = r.header().size() - 1;
    std::vector<std::vector<double>> values(k);
    std::vector<std::vector<std::uint8_t>> masks(k);
    std::optional<HourStamp> start, prev;
    std::vector<std::string> f;
    while (r.next(f)) {
        expect_width(r, f);
        const HourStamp t = r.timestamp(f[0]);
        if (prev && t - *prev != 1) {
            if (t <= *prev) throw FormatError("timestamps not increasing at " + f[0], r.line());
            throw FormatError("gap of " + std::to_string(t - *prev - 1) + " h before " + f[0] +
                                  "; missing hours must be present as empty cells",
                              r.line());
        }
        if (!start) start = t;
        prev = t;
        for (std::size_t j = 0; j < k; ++j) {
            bool missing = false;
            const double v = r.number_or_missing(f[j + 1], missing);
            values[j].push_back(v);
            masks[j].push_back(missing ? 0 : 1);
        }
    }
    if (!start) throw FormatError(path.string() + ": no data rows", r.line());
    std::map<std::string, HydroSeries> out;
    for (std::size_t j = 0; j < k; ++j) {
        const std::string& name = r.header()[j + 1];
        if (name.empty() || out.count(name)) throw FormatError("empty or duplicate column '" + name + "'", 1);
        out.emplace(name, HydroSeries(*start, std::move(values[j]), std::move(masks[j])));
    }
    return out;
}

void write_series_table(const fs::path& path, const std::map<std::string, HydroSeries>& series) {
    if (series.empty()) throw ValidationError("no series to write");
    HourStamp lo = series.begin()->second.start(), hi = series.begin()->second.last();
    for (const auto& [name, s] : series) {
        if (s.empty()) throw ValidationError("series " + name + " is empty");
        lo = std::min(lo, s.start());
        hi = std::max(hi, s.last());
    }
    auto out = open_out(path);
    out << "timestamp";
    for (const auto& [name, s] : series) out << ',' << name;
    out << '\n';
    for (HourStamp t = lo; t <= hi; t = t + 1) {
        out << t.to_string();
        for (const auto& [name, s] : series) {
            out << ',';
            auto i = s.index_of(t);
            if (i && s.observed(*i)) out << format_double(s.value(*i));
        }
        out << '\n';
    }
}

std::vector<GridField> read_grid(const fs::path& path) {
    CsvReader r(path);
    expect_header(r, kGridCells + 1, "timestamp");
    if (r.header().size() != kGridCells + 1)
        throw FormatError("grid needs exactly " + std::to_string(kGridCells) + " cell columns", 1);
    std::vector<GridField> out;
    std::vector<std::string> f;
    while (r.next(f)) {
        expect_width(r, f);
        const HourStamp t = r.timestamp(f[0]);
        if (!out.empty() && t <= out.back().time()) throw FormatError("grid timestamps not increasing at " + f[0], r.line());
        std::vector<double> cells(kGridCells);
        for (std::size_t j = 0; j < kGridCells; ++j) cells[j] = r.number(f[j + 1]);
        try {
            out.emplace_back(t, std::move(cells));
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), r.line());
        }
    }
    return out;
}

void write_grid(const fs::path& path, const std::vector<GridField>& fields) {
    auto out = open_out(path);
    out << "timestamp";
    for (std::size_t j = 0; j < kGridCells; ++j) out << ",c" << j;
    out << '\n';
    for (const auto& g : fields) {
        out << g.time().to_string();
        for (double v : g.cells()) out << ',' << format_double(v);
        out << '\n';
    }
}

std::vector<MonthlyFeature> read_features(const fs::path& path) {
    CsvReader r(path);
    expect_header(r, 2, "month_id");
    const std::size_t k = r.header().size() - 1;
    std::vector<MonthlyFeature> out;
    std::vector<std::string> f;
    while (r.next(f)) {
        expect_width(r, f);
        MonthlyFeature m;
        m.month = r.month(f[0]);
        if (!out.empty() && m.month <= out.back().month) throw FormatError("month ids not increasing at " + f[0], r.line());
        m.z.resize(static_cast<Eigen::Index>(k));
        for (std::size_t j = 0; j < k; ++j) m.z(static_cast<Eigen::Index>(j)) = r.number(f[j + 1]);
        out.push_back(std::move(m));
    }
    if (out.empty()) throw FormatError(path.string() + ": no data rows", r.line());
    return out;
}

void write_features(const fs::path& path, const std::vector<MonthlyFeature>& features) {
    if (features.empty()) throw ValidationError("no features to write");
    auto out = open_out(path);
    out << "month_id";
    for (Eigen::Index j = 0; j < features.front().z.size(); ++j) out << ",z" << j + 1;
    out << '\n';
    for (const auto& m : features) {
        if (m.z.size() != features.front().z.size()) throw ValidationError("ragged feature vectors");
        out << m.month.to_string();
        for (Eigen::Index j = 0; j < m.z.size(); ++j) out << ',' << format_double(m.z(j));
        out << '\n';
    }
}

WeightSeries read_weights(const fs::path& path, double epsilon) {
    CsvReader r(path);
    expect_header(r, 2, "month_id");
    if (r.header().size() != 2 || r.header()[1] != "STW") throw FormatError("weights header must be month_id,STW", 1);
    WeightSeries w;
    w.epsilon = epsilon;
    std::vector<double> v;
    std::vector<std::string> f;
    while (r.next(f)) {
        expect_width(r, f);
        const MonthKey m = r.month(f[0]);
        if (!w.months.empty() && m <= w.months.back()) throw FormatError("month ids not increasing at " + f[0], r.line());
        const double x = r.number(f[1]);
        if (x < 0.0) throw ParseError("negative weight", r.line());
        w.months.push_back(m);
        v.push_back(x);
    }
    w.monthly = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    return w;
}

void write_weights(const fs::path& path, const WeightSeries& weights) {
    auto out = open_out(path);
    out << "month_id,STW\n";
    for (std::size_t i = 0; i < weights.months.size(); ++i)
        out << weights.months[i].to_string() << ',' << format_double(weights.monthly(static_cast<Eigen::Index>(i))) << '\n';
}

void write_embedding(const fs::path& path, const std::vector<MonthKey>& months,
                     const Eigen::Ref<const Eigen::MatrixXd>& embedding) {
    if (embedding.rows() != static_cast<Eigen::Index>(months.size())) throw ShapeError("embedding rows != months");
    auto out = open_out(path);
    out << "month_id";
    for (Eigen::Index j = 0; j < embedding.cols(); ++j) out << ",v" << j + 1;
    out << '\n';
    for (std::size_t i = 0; i < months.size(); ++i) {
        out << months[i].to_string();
        for (Eigen::Index j = 0; j < embedding.cols(); ++j)
            out << ',' << format_double(embedding(static_cast<Eigen::Index>(i), j));
        out << '\n';
    }
}

std::pair<std::vector<MonthKey>, Eigen::MatrixXd> read_embedding(const fs::path& path) {
    auto feats = read_features(path);
    std::vector<MonthKey> months;
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(feats.size()), feats.front().z.size());
    for (std::size_t i = 0; i < feats.size(); ++i) {
        months.push_back(feats[i].month);
        Y.row(static_cast<Eigen::Index>(i)) = feats[i].z.transpose();
    }
    return {months, Y};
}

FloodBatchSet read_terms(const fs::path& path) {
    CsvReader r(path);
    expect_header(r, 3, "term_id");
    std::vector<FloodTerm> terms;
    std::vector<std::string> f;
    while (r.next(f)) {
        expect_width(r, f);
        FloodTerm t{r.integer(f[0]), r.timestamp(f[1]), r.timestamp(f[2])};
        if (t.end < t.start) throw ParseError("term ends before it starts", r.line());
        terms.push_back(t);
    }
    try {
        return FloodBatchSet(std::move(terms));
    } catch (const ValidationError& e) {
        throw FormatError(path.string() + ": " + e.what(), r.line());
    }
}

void write_terms(const fs::path& path, const FloodBatchSet& terms) {
    auto out = open_out(path);
    out << "term_id,start,end\n";
    for (const auto& t : terms) out << t.id << ',' << t.start.to_string() << ',' << t.end.to_string() << '\n';
}

CoefficientSet read_coefficients(const fs::path& path, const std::vector<int>& term_ids) {
    CsvReader r(path);
    expect_header(r, 3, "term_id");
    std::vector<std::string> models;
    std::map<std::pair<int, std::string>, double> cells;
    std::vector<std::string> f;
    while (r.next(f)) {
        expect_width(r, f);
        const int id = r.integer(f[0]);
        if (std::find(models.begin(), models.end(), f[1]) == models.end()) models.push_back(f[1]);
        if (!cells.emplace(std::pair{id, f[1]}, r.number(f[2])).second)
            throw FormatError("duplicate coefficient for term " + f[0] + " model " + f[1], r.line());
    }
    CoefficientSet c;
    c.models = models;
    c.alpha.resize(static_cast<Eigen::Index>(term_ids.size()), static_cast<Eigen::Index>(models.size()));
    for (std::size_t b = 0; b < term_ids.size(); ++b)
        for (std::size_t m = 0; m < models.size(); ++m) {
            auto it = cells.find({term_ids[b], models[m]});
            if (it == cells.end())
                throw ConfigError("no coefficient for term " + std::to_string(term_ids[b]) + " model " + models[m]);
            c.alpha(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m)) = it->second;
        }
    c.validate();
    return c;
}

void write_coefficients(const fs::path& path, const CoefficientSet& coeffs, const std::vector<int>& term_ids) {
    if (coeffs.alpha.rows() != static_cast<Eigen::Index>(term_ids.size())) throw ShapeError("coefficient rows != terms");
    auto out = open_out(path);
    out << "term_id,model,alpha\n";
    for (std::size_t b = 0; b < term_ids.size(); ++b)
        for (std::size_t m = 0; m < coeffs.models.size(); ++m)
            out << term_ids[b] << ',' << coeffs.models[m] << ','
                << format_double(coeffs.alpha(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m))) << '\n';
}

void write_norm_table(const fs::path& path, const NormTable& table) {
    auto out = open_out(path);
    out << "term_id,model,l2_norm\n";
    for (std::size_t b = 0; b < table.term_ids.size(); ++b)
        for (std::size_t m = 0; m < table.models.size(); ++m)
            out << table.term_ids[b] << ',' << table.models[m] << ','
                << format_double(table.norms(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m))) << '\n';
}

void write_skill_rows(const fs::path& path, const std::vector<SkillRow>& rows) {
    auto out = open_out(path);
    out << "method,weighting,term,fcd,rmse,mae,sim,norm_yhat,norm_y\n";
    for (const auto& r : rows)
        out << r.method << ',' << r.weighting << ',' << (r.term < 0 ? std::string("all") : std::to_string(r.term)) << ','
            << format_double(r.fcd) << ',' << format_double(r.rmse) << ',' << format_double(r.mae) << ','
            << format_double(r.sim) << ',' << format_double(r.norm_yhat) << ',' << format_double(r.norm_y) << '\n';
}

std::vector<fs::path> emit_plotdata(const fs::path& dir, const std::vector<int>& term_ids,
                                    const std::vector<std::vector<HourStamp>>& times,
                                    const std::vector<Eigen::VectorXd>& actual, const std::vector<std::string>& models,
                                    const std::vector<std::vector<Eigen::VectorXd>>& per_model,
                                    const std::vector<Eigen::VectorXd>& ensemble) {
    const std::size_t B = term_ids.size();
    if (times.size() != B || actual.size() != B || ensemble.size() != B || per_model.size() != models.size())
        throw ShapeError("plot data inputs disagree on term / model counts");
    std::vector<fs::path> written;
    for (std::size_t b = 0; b < B; ++b) {
        const auto n = static_cast<Eigen::Index>(times[b].size());
        if (actual[b].size() != n || ensemble[b].size() != n) throw ShapeError("plot data length mismatch");
        for (const auto& pm : per_model)
            if (pm.size() != B || pm[b].size() != n) throw ShapeError("plot data length mismatch");
        const fs::path p = dir / ("plot_term_" + std::to_string(term_ids[b]) + ".csv");
        auto out = open_out(p);
        out << "timestamp,actual";
        for (const auto& m : models) out << ',' << m;
        out << ",ensemble\n";
        for (Eigen::Index t = 0; t < n; ++t) {
            out << times[b][static_cast<std::size_t>(t)].to_string() << ',' << format_double(actual[b](t));
            for (const auto& pm : per_model) out << ',' << format_double(pm[b](t));
            out << ',' << format_double(ensemble[b](t)) << '\n';
        }
        written.push_back(p);
    }
    return written;
}

const std::vector<Eigen::VectorXd>& TermTable::column(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
        if (columns[j] == name) return values[j];
    throw SchemaError("no column '" + name + "'");
}

void write_term_table(const fs::path& path, const TermTable& table) {
    const std::size_t B = table.term_ids.size();
    if (table.times.size() != B || table.values.size() != table.columns.size()) throw ShapeError("term table shape");
    auto out = open_out(path);
    out << "timestamp,term_id";
    for (const auto& c : table.columns) out << ',' << c;
    out << '\n';
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < table.times[b].size(); ++t) {
            out << table.times[b][t].to_string() << ',' << table.term_ids[b];
            for (const auto& col : table.values) out << ',' << format_double(col.at(b)(static_cast<Eigen::Index>(t)));
            out << '\n';
        }
}

TermTable read_term_table(const fs::path& path) {
    CsvReader r(path);
    expect_header(r, 3, "timestamp");
    if (r.header()[1] != "term_id") throw FormatError("second column must be term_id", 1);
    TermTable tt;
    tt.columns.assign(r.header().begin() + 2, r.header().end());
    std::vector<std::vector<std::vector<double>>> cols(tt.columns.size());
    std::set<int> closed;
    std::vector<std::string> f;
    while (r.next(f)) {
        expect_width(r, f);
        const HourStamp t = r.timestamp(f[0]);
        const int id = r.integer(f[1]);
        if (tt.term_ids.empty() || tt.term_ids.back() != id) {
            if (!tt.term_ids.empty()) closed.insert(tt.term_ids.back());
            if (closed.count(id)) throw FormatError("rows of term " + f[1] + " are not contiguous", r.line());
            tt.term_ids.push_back(id);
            tt.times.emplace_back();
            for (auto& c : cols) c.emplace_back();
        } else if (t <= tt.times.back().back()) {
            throw FormatError("timestamps not increasing within term " + f[1], r.line());
        }
        tt.times.back().push_back(t);
        for (std::size_t j = 0; j < cols.size(); ++j) cols[j].back().push_back(r.number(f[j + 2]));
    }
    tt.values.resize(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (auto& v : cols[j])
            tt.values[j].push_back(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    return tt;
}

}  // namespace hydroens::io
