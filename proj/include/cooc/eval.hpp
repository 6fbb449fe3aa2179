#pragma once

#include <map>
#include <string>
#include <vector>

namespace cooc {

struct ScoredItem {
    std::string id;
    int label = 0;          // 0 untampered, 1 tampered
    double score = 0.0;     // probability of "tampered", in [0,1]
    std::string tag;        // manipulation type, empty for untampered
};

struct ScoredSet {
    std::vector<ScoredItem> items;
};

struct RocPoint {
    double fpr = 0.0, tpr = 0.0;
};

struct EvalReport {
    double auc = 0.0;
    std::vector<RocPoint> roc_points;        // (0,0) ... (1,1)
    std::map<std::string, double> per_type_auc;
    size_t positives = 0, negatives = 0;
};

// Mann-Whitney AUC with midrank tie handling, O(n log n):
// P(score_pos > score_neg) + 0.5 * P(equal). Requires both classes.
double auc(const ScoredSet& scored);

// ROC operating points, one per distinct threshold, from (0,0) to (1,1).
std::vector<RocPoint> roc_curve(const ScoredSet& scored);

// Per-manipulation breakdown: each tag's tampered items are scored
// against ALL untampered items.
EvalReport per_type_report(const ScoredSet& scored);

// Arithmetic-mean score fusion over >= 2 prediction sets covering the
// same ids. Labels must agree; tags are taken from the first set. Item
// order follows the first set.
ScoredSet fuse(const std::vector<ScoredSet>& predictions);

// Interchange CSV: header "id,label,score,manipulation_type".
void save_scored_csv(const std::string& path, const ScoredSet& s);
ScoredSet load_scored_csv(const std::string& path);

std::string report_to_json(const EvalReport& r, const std::string& config_echo);
std::string report_to_text(const EvalReport& r);

} // namespace cooc
