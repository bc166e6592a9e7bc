#include "nlikit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nlikit/errors.hpp"
#include "nlikit/rng.hpp"

using json = nlohmann::json;

namespace nlikit::metrics {

void Confusion::add(bool truth_positive, bool predicted_positive) {
    if (truth_positive) {
        predicted_positive ? ++tp : ++fn;
    } else {
        predicted_positive ? ++fp : ++tn;
    }
}

Confusion& Confusion::operator+=(const Confusion& other) {
    tp += other.tp;
    tn += other.tn;
    fp += other.fp;
    fn += other.fn;
    return *this;
}

Confusion confusion_from(std::span<const Label> truth, std::span<const Label> predicted) {
    if (truth.size() != predicted.size())
        throw Error("confusion_from: sequence lengths differ");
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i)
        c.add(truth[i] == Label::entail, predicted[i] == Label::entail);
    return c;
}

double mcc(const Confusion& c) {
    const double tp = static_cast<double>(c.tp);
    const double tn = static_cast<double>(c.tn);
    const double fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn);
    const double m1 = tp + fp, m2 = tp + fn, m3 = tn + fp, m4 = tn + fn;
    if (m1 == 0.0 || m2 == 0.0 || m3 == 0.0 || m4 == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(m1 * m2 * m3 * m4);
}

double f1(const Confusion& c) {
    const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
    if (denom == 0.0) return 0.0;
    return 2.0 * static_cast<double>(c.tp) / denom;
}

double accuracy(const Confusion& c) {
    const double total = static_cast<double>(c.total());
    if (total == 0.0) return 0.0;
    return static_cast<double>(c.tp + c.tn) / total;
}

KappaResult cohen_kappa(std::span<const int> rater_a, std::span<const int> rater_b) {
    if (rater_a.size() != rater_b.size())
        throw Error("cohen_kappa: sequence lengths differ");
    const std::uint64_t n = rater_a.size();
    if (n == 0) throw Error("cohen_kappa: empty sequences");

    std::uint64_t agree = 0, a1 = 0, b1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (rater_a[i] != 0 && rater_a[i] != 1)
            throw Error("cohen_kappa: rater A value outside {0,1}");
        if (rater_b[i] != 0 && rater_b[i] != 1)
            throw Error("cohen_kappa: rater B value outside {0,1}");
        agree += rater_a[i] == rater_b[i];
        a1 += rater_a[i];
        b1 += rater_b[i];
    }
    const std::uint64_t a0 = n - a1, b0 = n - b1;
    // kappa = (p_o - p_e) / (1 - p_e) with integer numerator/denominator.
    const double chance = static_cast<double>(a0) * static_cast<double>(b0) +
                          static_cast<double>(a1) * static_cast<double>(b1);
    const double denom = static_cast<double>(n) * static_cast<double>(n) - chance;
    if (denom == 0.0) return {0.0, false};
    return {(static_cast<double>(n) * static_cast<double>(agree) - chance) / denom, true};
}

BootstrapResult bootstrap_se(std::span<const Label> labels, std::span<const Label> preds,
                             const Statistic& statistic, int B, std::uint64_t seed) {
    if (labels.size() != preds.size())
        throw Error("bootstrap_se: sequence lengths differ");
    if (B < 100) throw Error("bootstrap_se: B must be at least 100");
    const std::size_t n = labels.size();
    if (n == 0) throw Error("bootstrap_se: empty sequences");

    BootstrapResult out;
    out.point = statistic(confusion_from(labels, preds));

    std::vector<double> values(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        rng::DetRng r(rng::derive(seed, "bootstrap", static_cast<std::uint64_t>(b)));
        Confusion c;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = static_cast<std::size_t>(r.below(n));
            c.add(labels[k] == Label::entail, preds[k] == Label::entail);
        }
        values[static_cast<std::size_t>(b)] = statistic(c);
    }

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(B);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out.se = std::sqrt(ss / static_cast<double>(B - 1));
    return out;
}

namespace {

SliceMetrics make_slice(const std::string& name, const std::vector<const PredictionRecord*>& rows,
                        int B, std::uint64_t seed) {
    SliceMetrics s;
    s.slice = name;
    s.n = rows.size();
    std::vector<Label> truth, pred;
    truth.reserve(rows.size());
    pred.reserve(rows.size());
    for (const auto* r : rows) {
        s.confusion.add(r->truth == Label::entail, r->predicted == Label::entail);
        truth.push_back(r->truth);
        pred.push_back(r->predicted);
    }
    s.mcc = mcc(s.confusion);
    s.f1 = f1(s.confusion);
    s.accuracy = accuracy(s.confusion);
    const std::uint64_t slice_seed = rng::derive(seed, "slice", name);
    s.mcc_se = bootstrap_se(truth, pred, [](const Confusion& c) { return mcc(c); }, B, slice_seed).se;
    s.f1_se = bootstrap_se(truth, pred, [](const Confusion& c) { return f1(c); }, B, slice_seed).se;
    s.accuracy_se =
        bootstrap_se(truth, pred, [](const Confusion& c) { return accuracy(c); }, B, slice_seed).se;
    return s;
}

json slice_to_json(const SliceMetrics& s) {
    return json{{"slice", s.slice},
                {"n", s.n},
                {"confusion", {{"tp", s.confusion.tp}, {"tn", s.confusion.tn},
                               {"fp", s.confusion.fp}, {"fn", s.confusion.fn}}},
                {"mcc", s.mcc},
                {"mcc_se", s.mcc_se},
                {"f1", s.f1},
                {"f1_se", s.f1_se},
                {"accuracy", s.accuracy},
                {"accuracy_se", s.accuracy_se}};
}

void append_text_row(std::ostringstream& out, const SliceMetrics& s) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-28s %8zu  %6.3f (%5.3f)  %6.3f (%5.3f)  %6.3f (%5.3f)\n",
                  s.slice.c_str(), s.n, s.mcc, s.mcc_se, s.f1, s.f1_se, s.accuracy,
                  s.accuracy_se);
    out << buf;
}

void append_csv_row(std::ostringstream& out, const std::string& model,
                    const std::string& kind, const SliceMetrics& s) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  model.c_str(), kind.c_str(), s.slice.c_str(), s.n, s.mcc, s.mcc_se, s.f1,
                  s.f1_se, s.accuracy, s.accuracy_se);
    out << buf;
}

} // namespace

std::string EvalReport::to_json_string() const {
    json per_task_json = json::array();
    for (const auto& s : per_task) per_task_json.push_back(slice_to_json(s));
    json per_dataset_json = json::array();
    for (const auto& s : per_dataset) per_dataset_json.push_back(slice_to_json(s));
    json j{{"model", model},
           {"overall", slice_to_json(overall)},
           {"per_task", per_task_json},
           {"per_dataset", per_dataset_json},
           {"bootstrap_samples", bootstrap_samples},
           {"seed", seed}};
    return j.dump(2);
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out << "  slice                               n     mcc (se)       f1 (se)        acc (se)\n";
    out << "overall\n";
    append_text_row(out, overall);
    out << "per task\n";
    for (const auto& s : per_task) append_text_row(out, s);
    out << "per dataset\n";
    for (const auto& s : per_dataset) append_text_row(out, s);
    return out.str();
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "model,kind,slice,n,mcc,mcc_se,f1,f1_se,accuracy,accuracy_se\n";
    append_csv_row(out, model, "overall", overall);
    for (const auto& s : per_task) append_csv_row(out, model, "task", s);
    for (const auto& s : per_dataset) append_csv_row(out, model, "dataset", s);
    return out.str();
}

EvalReport report(std::span<const PredictionRecord> records, const ReportOptions& opts) {
    std::vector<std::string> missing;
    for (const auto& r : records) {
        if (r.source_dataset.empty()) missing.push_back(r.example_id);
    }
    if (!missing.empty()) {
        std::string ids;
        for (const auto& id : missing) {
            if (!ids.empty()) ids += ", ";
            ids += id;
        }
        throw Error("records missing source_dataset tags: " + ids);
    }
    if (records.empty()) throw Error("report: no prediction records");

    EvalReport rep;
    rep.model = opts.model;
    rep.bootstrap_samples = opts.bootstrap_samples;
    rep.seed = opts.seed;

    std::vector<const PredictionRecord*> all;
    std::map<std::string, std::vector<const PredictionRecord*>> by_task;
    std::map<std::string, std::vector<const PredictionRecord*>> by_dataset;
    for (const auto& r : records) {
        all.push_back(&r);
        by_task[to_string(r.task)].push_back(&r);
        by_dataset[r.source_dataset].push_back(&r);
    }

    rep.overall = make_slice("overall", all, opts.bootstrap_samples, opts.seed);
    for (const auto& [name, rows] : by_task)
        rep.per_task.push_back(make_slice(name, rows, opts.bootstrap_samples, opts.seed));
    for (const auto& [name, rows] : by_dataset)
        rep.per_dataset.push_back(make_slice(name, rows, opts.bootstrap_samples, opts.seed));
    std::sort(rep.per_dataset.begin(), rep.per_dataset.end(),
              [](const SliceMetrics& a, const SliceMetrics& b) {
                  return a.mcc != b.mcc ? a.mcc < b.mcc : a.slice < b.slice;
              });
    return rep;
}

} // namespace nlikit::metrics
