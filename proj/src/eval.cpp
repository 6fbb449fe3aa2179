#include "cooc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "cooc/error.hpp"

namespace cooc {

namespace {

void check_scores(const ScoredSet& s) {
    if (s.items.empty())
        throw Error(ErrorKind::invalid_argument, "empty scored set");
    for (const auto& it : s.items) {
        if (it.label != 0 && it.label != 1)
            throw Error(ErrorKind::invalid_argument, "label must be 0 or 1: " + it.id);
        if (!std::isfinite(it.score) || it.score < 0.0 || it.score > 1.0)
            throw Error(ErrorKind::invalid_argument,
                        "score must be finite and in [0,1]: " + it.id);
    }
}

} // namespace

double auc(const ScoredSet& scored) {
    check_scores(scored);
    const size_t n = scored.items.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return scored.items[a].score < scored.items[b].score;
    });

    size_t n_pos = 0, n_neg = 0;
    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n &&
               scored.items[order[j]].score == scored.items[order[i]].score)
            ++j;
        // ranks are 1-based; tied scores share the midrank
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (size_t k = i; k < j; ++k) {
            if (scored.items[order[k]].label == 1) {
                pos_rank_sum += midrank;
                ++n_pos;
            } else {
                ++n_neg;
            }
        }
        i = j;
    }
    if (n_pos == 0 || n_neg == 0)
        throw Error(ErrorKind::invalid_argument,
                    "AUC requires both classes in the scored set");
    const double u = pos_rank_sum -
                     static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<RocPoint> roc_curve(const ScoredSet& scored) {
    check_scores(scored);
    size_t n_pos = 0, n_neg = 0;
    for (const auto& it : scored.items)
        it.label == 1 ? ++n_pos : ++n_neg;
    if (n_pos == 0 || n_neg == 0)
        throw Error(ErrorKind::invalid_argument,
                    "ROC requires both classes in the scored set");

    std::vector<size_t> order(scored.items.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return scored.items[a].score > scored.items[b].score;
    });

    std::vector<RocPoint> pts;
    pts.push_back(RocPoint{0.0, 0.0});
    size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() &&
               scored.items[order[j]].score == scored.items[order[i]].score)
            ++j;
        for (size_t k = i; k < j; ++k)
            scored.items[order[k]].label == 1 ? ++tp : ++fp;
        pts.push_back(RocPoint{static_cast<double>(fp) / static_cast<double>(n_neg),
                               static_cast<double>(tp) / static_cast<double>(n_pos)});
        i = j;
    }
    return pts;
}

EvalReport per_type_report(const ScoredSet& scored) {
    check_scores(scored);

    ScoredSet untampered;
    std::map<std::string, ScoredSet> by_tag;
    for (const auto& it : scored.items) {
        if (it.label == 0)
            untampered.items.push_back(it);
        else
            by_tag[it.tag.empty() ? "untagged" : it.tag].items.push_back(it);
    }
    if (untampered.items.empty())
        throw Error(ErrorKind::invalid_argument, "no untampered items to score against");
    if (by_tag.empty())
        throw Error(ErrorKind::invalid_argument, "no tampered items");

    EvalReport rep;
    rep.auc = auc(scored);
    rep.roc_points = roc_curve(scored);
    rep.negatives = untampered.items.size();
    rep.positives = scored.items.size() - untampered.items.size();
    for (auto& [tag, set] : by_tag) {
        ScoredSet merged = untampered;
        merged.items.insert(merged.items.end(), set.items.begin(), set.items.end());
        rep.per_type_auc[tag] = auc(merged);
    }
    return rep;
}

ScoredSet fuse(const std::vector<ScoredSet>& predictions) {
    if (predictions.size() < 2)
        throw Error(ErrorKind::invalid_argument, "fusion needs at least 2 prediction sets");
    const ScoredSet& first = predictions.front();
    check_scores(first);

    std::unordered_map<std::string, size_t> index;
    for (size_t i = 0; i < first.items.size(); ++i)
        if (!index.emplace(first.items[i].id, i).second)
            throw Error(ErrorKind::invalid_argument,
                        "duplicate id in scored set: " + first.items[i].id);

    ScoredSet fused = first;
    for (size_t p = 1; p < predictions.size(); ++p) {
        const ScoredSet& s = predictions[p];
        check_scores(s);
        if (s.items.size() != first.items.size())
            throw Error(ErrorKind::invalid_argument,
                        "prediction sets cover different ids");
        for (const auto& it : s.items) {
            auto found = index.find(it.id);
            if (found == index.end())
                throw Error(ErrorKind::invalid_argument,
                            "prediction sets cover different ids: " + it.id);
            ScoredItem& dst = fused.items[found->second];
            if (dst.label != it.label)
                throw Error(ErrorKind::invalid_argument,
                            "label disagreement for id: " + it.id);
            dst.score += it.score;
        }
    }
    const double inv = 1.0 / static_cast<double>(predictions.size());
    for (auto& it : fused.items) it.score *= inv;
    return fused;
}

// ---------------------------------------------------------------------------
// CSV interchange
// ---------------------------------------------------------------------------

void save_scored_csv(const std::string& path, const ScoredSet& s) {
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw Error(ErrorKind::io_failure, "cannot write " + path);
    f << "id,label,score,manipulation_type\n";
    char buf[64];
    for (const auto& it : s.items) {
        if (it.id.find(',') != std::string::npos ||
            it.tag.find(',') != std::string::npos)
            throw Error(ErrorKind::invalid_argument,
                        "ids/tags must not contain commas: " + it.id);
        std::snprintf(buf, sizeof(buf), "%.17g", it.score);
        f << it.id << ',' << it.label << ',' << buf << ',' << it.tag << '\n';
    }
    if (!f)
        throw Error(ErrorKind::io_failure, "short write: " + path);
}

ScoredSet load_scored_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw Error(ErrorKind::unreadable_file, "cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("id,label,score", 0) != 0)
        throw Error(ErrorKind::corrupt_stream, "missing CSV header in " + path);

    ScoredSet s;
    size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, label, score, tag;
        if (!std::getline(ss, id, ',') || !std::getline(ss, label, ',') ||
            !std::getline(ss, score, ','))
            throw Error(ErrorKind::corrupt_stream,
                        path + ":" + std::to_string(lineno) + ": bad CSV row");
        std::getline(ss, tag, ',');
        try {
            s.items.push_back(ScoredItem{id, std::stoi(label), std::stod(score), tag});
        } catch (const std::exception&) {
            throw Error(ErrorKind::corrupt_stream,
                        path + ":" + std::to_string(lineno) + ": bad CSV value");
        }
    }
    check_scores(s);
    return s;
}

std::string report_to_json(const EvalReport& r, const std::string& config_echo) {
    nlohmann::json j;
    j["auc"] = r.auc;
    j["positives"] = r.positives;
    j["negatives"] = r.negatives;
    j["per_type_auc"] = r.per_type_auc;
    auto roc = nlohmann::json::array();
    for (const auto& p : r.roc_points) roc.push_back({p.fpr, p.tpr});
    j["roc_points"] = roc;
    if (!config_echo.empty())
        j["config"] = nlohmann::json::parse(config_echo);
    return j.dump(2) + "\n";
}

std::string report_to_text(const EvalReport& r) {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "Overall AUC-ROC: %.4f  (%zu tampered / %zu untampered)\n\n",
                  r.auc, r.positives, r.negatives);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-28s %s\n", "Manipulation Type", "AUC-ROC");
    out += buf;
    out += std::string(40, '-') + "\n";
    for (const auto& [tag, v] : r.per_type_auc) {
        std::snprintf(buf, sizeof(buf), "%-28s %.4f\n", tag.c_str(), v);
        out += buf;
    }
    return out;
}

} // namespace cooc
