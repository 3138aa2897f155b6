#include "complaints/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <regex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "complaints/common.hpp"

namespace complaints {

namespace {

struct DomainNames {
    Domain domain;
    std::string_view key;
    std::string_view display;
};

constexpr std::array<DomainNames, 10> kDomainNames = {{
    {Domain::food_beverage, "food_beverage", "Food & Beverage"},
    {Domain::apparel, "apparel", "Apparel"},
    {Domain::retail, "retail", "Retail"},
    {Domain::cars, "cars", "Cars"},
    {Domain::services, "services", "Services"},
    {Domain::software, "software", "Software & Online Services"},
    {Domain::transport, "transport", "Transport"},
    {Domain::electronics, "electronics", "Electronics"},
    {Domain::other, "other", "Other"},
    {Domain::unknown, "unknown", "Unknown"},
}};

std::string normalize_domain_text(std::string_view s) {
    std::string out;
    for (char c : to_lower_ascii(trim(s))) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(c);
        } else if (c == '&') {
            out += "and";
        }
    }
    return out;
}

}  // namespace

std::string_view domain_key(Domain d) {
    for (const auto& n : kDomainNames) {
        if (n.domain == d) return n.key;
    }
    return "unknown";
}

std::string_view domain_display_name(Domain d) {
    for (const auto& n : kDomainNames) {
        if (n.domain == d) return n.display;
    }
    return "Unknown";
}

std::optional<Domain> parse_domain(std::string_view s) {
    static const std::unordered_map<std::string, Domain> aliases = [] {
        std::unordered_map<std::string, Domain> m;
        for (const auto& n : kDomainNames) {
            m[normalize_domain_text(n.key)] = n.domain;
            m[normalize_domain_text(n.display)] = n.domain;
        }
        m["food"] = Domain::food_beverage;
        m["fandb"] = Domain::food_beverage;
        m["foodandbev"] = Domain::food_beverage;
        m["car"] = Domain::cars;
        m["service"] = Domain::services;
        m["softwareandonline"] = Domain::software;
        m["softwareonlineservices"] = Domain::software;
        m["none"] = Domain::unknown;
        m[""] = Domain::unknown;
        return m;
    }();
    const auto it = aliases.find(normalize_domain_text(s));
    if (it == aliases.end()) return std::nullopt;
    return it->second;
}

std::size_t Corpus::count(Label l) const {
    return static_cast<std::size_t>(std::count_if(documents.begin(), documents.end(),
                                                  [l](const Document& d) { return d.label == l; }));
}

std::string anonymize(std::string_view text) {
    static const std::regex url_re(R"((https?://|www\.)[^\s]+)",
                                   std::regex::ECMAScript | std::regex::icase);
    static const std::regex mention_re(R"(@[A-Za-z0-9_]+)");
    std::string out = std::regex_replace(std::string(text), url_re, "<URL>");
    return std::regex_replace(out, mention_re, "<USER>");
}

std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view s) {
    const std::string t = trim(s);
    if (t.size() != 10 || t[4] != '-' || t[7] != '-') return std::nullopt;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (!std::isdigit(static_cast<unsigned char>(t[i]))) return std::nullopt;
    }
    const std::chrono::year_month_day d{
        std::chrono::year{std::stoi(t.substr(0, 4))},
        std::chrono::month{static_cast<unsigned>(std::stoi(t.substr(5, 2)))},
        std::chrono::day{static_cast<unsigned>(std::stoi(t.substr(8, 2)))}};
    if (!d.ok()) return std::nullopt;
    return d;
}

std::string format_iso_date(const std::chrono::year_month_day& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

bool read_tsv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;
    ++line_no;
    std::string field;
    bool quoted = false;
    bool at_field_start = true;
    char c = 0;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line_no;
                field.push_back(c);
            }
            continue;
        }
        if (at_field_start && c == '"') {
            quoted = true;
            at_field_start = false;
            continue;
        }
        at_field_start = false;
        if (c == '\t') {
            fields.push_back(std::move(field));
            field.clear();
            at_field_start = true;
        } else if (c == '\n') {
            break;
        } else if (c == '\r' && in.peek() == '\n') {
            continue;
        } else {
            field.push_back(c);
        }
    }
    if (quoted) {
        throw FormatError("unterminated quoted field at line " + std::to_string(line_no));
    }
    fields.push_back(std::move(field));
    return true;
}

std::string quote_tsv_field(std::string_view field) {
    const bool needs = field.find_first_of("\t\n\r") != std::string_view::npos ||
                       (!field.empty() && field.front() == '"');
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

namespace {

Label parse_label(std::string_view s, std::size_t row) {
    const std::string t = to_lower_ascii(trim(s));
    if (t == "1") return Label::complaint;
    if (t == "0") return Label::not_complaint;
    if (t.empty() || t == "?") return Label::unlabeled;
    throw DataError("row " + std::to_string(row) + ": malformed label '" + std::string(s) + "'");
}

std::string label_text(Label l) {
    switch (l) {
        case Label::complaint: return "1";
        case Label::not_complaint: return "0";
        case Label::unlabeled: return "";
    }
    return "";
}

}  // namespace

Corpus read_corpus(std::istream& in, std::string source_tag) {
    std::vector<std::string> fields;
    std::size_t line_no = 0;
    if (!read_tsv_record(in, fields, line_no)) {
        throw SchemaError("corpus file is empty (missing header row)");
    }
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        col[to_lower_ascii(trim(fields[i]))] = i;
    }
    for (const char* required : {"id", "text", "domain", "label"}) {
        if (!col.contains(required)) {
            throw SchemaError(std::string("missing required column '") + required + "'");
        }
    }
    const std::size_t width = fields.size();
    const auto opt_col = [&](const char* name) -> std::optional<std::size_t> {
        const auto it = col.find(name);
        if (it == col.end()) return std::nullopt;
        return it->second;
    };
    const auto date_col = opt_col("date");
    const auto tags_col = opt_col("pos_tags");

    Corpus corpus;
    corpus.source_tag = std::move(source_tag);
    std::unordered_set<std::string> seen;
    std::size_t row = 0;
    while (read_tsv_record(in, fields, line_no)) {
        ++row;
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;
        if (fields.size() != width) {
            throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(width) +
                            " fields, found " + std::to_string(fields.size()));
        }
        Document doc;
        doc.id = trim(fields[col["id"]]);
        if (doc.id.empty()) {
            throw DataError("row " + std::to_string(row) + ": empty id");
        }
        if (!seen.insert(doc.id).second) {
            throw IntegrityError("row " + std::to_string(row) + ": duplicate id '" + doc.id + "'");
        }
        doc.raw_text = fields[col["text"]];
        doc.clean_text = anonymize(doc.raw_text);
        const auto domain = parse_domain(fields[col["domain"]]);
        if (!domain) {
            throw DataError("row " + std::to_string(row) + ": unknown domain '" +
                            fields[col["domain"]] + "'");
        }
        doc.domain = *domain;
        doc.label = parse_label(fields[col["label"]], row);
        if (date_col && !trim(fields[*date_col]).empty()) {
            doc.post_date = parse_iso_date(fields[*date_col]);
            if (!doc.post_date) {
                throw DataError("row " + std::to_string(row) + ": malformed date '" +
                                fields[*date_col] + "'");
            }
        }
        if (tags_col && !trim(fields[*tags_col]).empty()) {
            std::vector<std::string> tags;
            std::istringstream ts(fields[*tags_col]);
            for (std::string t; ts >> t;) tags.push_back(t);
            doc.pos_tags = std::move(tags);
        }
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, std::string source_tag) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open corpus file " + path.string());
    }
    return read_corpus(in, std::move(source_tag));
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    const bool any_date = std::any_of(corpus.documents.begin(), corpus.documents.end(),
                                      [](const Document& d) { return d.post_date.has_value(); });
    const bool any_tags = std::any_of(corpus.documents.begin(), corpus.documents.end(),
                                      [](const Document& d) { return d.pos_tags.has_value(); });
    out << "id\ttext\tdomain\tlabel";
    if (any_date) out << "\tdate";
    if (any_tags) out << "\tpos_tags";
    out << '\n';
    for (const auto& d : corpus.documents) {
        out << quote_tsv_field(d.id) << '\t' << quote_tsv_field(d.raw_text) << '\t'
            << domain_key(d.domain) << '\t' << label_text(d.label);
        if (any_date) out << '\t' << (d.post_date ? format_iso_date(*d.post_date) : "");
        if (any_tags) {
            out << '\t';
            if (d.pos_tags) {
                for (std::size_t i = 0; i < d.pos_tags->size(); ++i) {
                    if (i) out << ' ';
                    out << (*d.pos_tags)[i];
                }
            }
        }
        out << '\n';
    }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_corpus(out, corpus);
}

std::set<std::string> default_trigger_hashtags() {
    return {"#appallingcustomercare", "#badbusiness", "#badcustomerserivice", "#badservice",
            "#lostbusiness",          "#unhappycustomer", "#worstbrand"};
}

std::string strip_hashtags(std::string_view text, const std::set<std::string>& hashtags) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '#') {
            std::size_t j = i + 1;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
                ++j;
            }
            if (j > i + 1 && hashtags.contains(to_lower_ascii(text.substr(i, j - i)))) {
                i = j;
                continue;
            }
        }
        out.push_back(text[i]);
        ++i;
    }
    // collapse the whitespace left behind
    std::string collapsed;
    bool pending_space = false;
    for (char c : out) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !collapsed.empty();
        } else {
            if (pending_space) collapsed.push_back(' ');
            pending_space = false;
            collapsed.push_back(c);
        }
    }
    return collapsed;
}

Corpus ingest_distant(std::istream& positives, std::istream& negatives,
                      const std::set<std::string>& trigger_hashtags) {
    if (trigger_hashtags.empty()) {
        throw ConfigError("distant supervision needs at least one trigger hashtag");
    }
    std::set<std::string> triggers;
    for (const auto& h : trigger_hashtags) {
        std::string t = to_lower_ascii(trim(h));
        if (t.empty()) continue;
        if (t.front() != '#') t.insert(t.begin(), '#');
        triggers.insert(t);
    }

    Corpus corpus;
    corpus.source_tag = "distant";
    std::unordered_set<std::string> seen;
    const auto ingest = [&](std::istream& in, Label label, const char* prefix) {
        std::size_t line_no = 0;
        std::size_t rows = 0;
        for (std::string line; std::getline(in, line);) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            ++rows;
            Document doc;
            doc.id = std::string(prefix) + std::to_string(line_no);
            doc.raw_text = strip_hashtags(line, triggers);
            doc.clean_text = anonymize(doc.raw_text);
            doc.label = label;
            const std::string key = to_lower_ascii(trim(doc.clean_text));
            if (key.empty() || !seen.insert(key).second) continue;
            corpus.documents.push_back(std::move(doc));
        }
        if (rows == 0) {
            throw DataError(std::string("distant ") +
                            (label == Label::complaint ? "positive" : "negative") +
                            " file has no texts");
        }
    };
    ingest(positives, Label::complaint, "dpos_");
    ingest(negatives, Label::not_complaint, "dneg_");
    return corpus;
}

Corpus ingest_distant(const std::filesystem::path& positives,
                      const std::filesystem::path& negatives,
                      const std::set<std::string>& trigger_hashtags) {
    std::ifstream pos(positives, std::ios::binary);
    if (!pos) throw DataError("cannot open " + positives.string());
    std::ifstream neg(negatives, std::ios::binary);
    if (!neg) throw DataError("cannot open " + negatives.string());
    return ingest_distant(pos, neg, trigger_hashtags);
}

// ---------------------------------------------------------------------------
// Fold planning

std::vector<int> stratified_assignment(const std::vector<std::string>& ids,
                                       const std::vector<int>& labels, std::size_t folds,
                                       std::uint64_t seed) {
    if (ids.size() != labels.size()) {
        throw InvariantError("stratified_assignment: ids/labels length mismatch");
    }
    if (folds == 0) throw ConfigError("fold count must be positive");
    std::vector<int> assignment(ids.size(), -1);
    const std::uint64_t salt = mix64(seed ^ 0x5f01d5eedULL);
    std::size_t dealt = 0;
    for (int cls : {1, 0}) {
        std::vector<std::pair<std::uint64_t, std::size_t>> order;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (labels[i] == cls) order.emplace_back(mix64(fnv1a(ids[i]) ^ salt), i);
        }
        if (order.size() < folds) {
            throw StratificationError("class " + std::to_string(cls) + " has " +
                                      std::to_string(order.size()) + " documents, fewer than " +
                                      std::to_string(folds) + " folds");
        }
        std::sort(order.begin(), order.end());
        for (const auto& [h, i] : order) {
            assignment[i] = static_cast<int>(dealt % folds);
            ++dealt;
        }
    }
    return assignment;
}

namespace {

std::vector<int> binary_labels(const Corpus& corpus) {
    std::vector<int> labels;
    labels.reserve(corpus.size());
    for (const auto& d : corpus.documents) {
        if (d.label == Label::unlabeled) {
            throw StratificationError("document '" + d.id + "' is unlabeled");
        }
        labels.push_back(d.is_complaint() ? 1 : 0);
    }
    return labels;
}

void fill_inner(FoldPlan& plan, const std::vector<int>& labels) {
    plan.inner_fold.assign(plan.outer, std::vector<int>(plan.doc_ids.size(), -1));
    for (std::size_t k = 0; k < plan.outer; ++k) {
        std::vector<std::string> ids;
        std::vector<int> lab;
        std::vector<std::size_t> where;
        for (std::size_t i = 0; i < plan.doc_ids.size(); ++i) {
            if (plan.outer_fold[i] == static_cast<int>(k)) continue;
            ids.push_back(plan.doc_ids[i]);
            lab.push_back(labels[i]);
            where.push_back(i);
        }
        const auto inner = stratified_assignment(ids, lab, plan.inner, mix64(plan.seed + k + 1));
        for (std::size_t t = 0; t < where.size(); ++t) {
            plan.inner_fold[k][where[t]] = inner[t];
        }
    }
}

}  // namespace

FoldPlan plan_nested_folds(const Corpus& corpus, std::size_t outer, std::size_t inner,
                           std::uint64_t seed) {
    if (outer < 2 || inner < 2) {
        throw ConfigError("nested CV needs at least 2 outer and 2 inner folds");
    }
    FoldPlan plan;
    plan.outer = outer;
    plan.inner = inner;
    plan.seed = seed;
    for (const auto& d : corpus.documents) plan.doc_ids.push_back(d.id);
    const auto labels = binary_labels(corpus);
    plan.outer_fold = stratified_assignment(plan.doc_ids, labels, outer, seed);
    fill_inner(plan, labels);
    return plan;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < outer_fold.size(); ++i) {
        if (outer_fold[i] == static_cast<int>(k)) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < outer_fold.size(); ++i) {
        if (outer_fold[i] != static_cast<int>(k)) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::inner_val_indices(std::size_t k, std::size_t j) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < outer_fold.size(); ++i) {
        if (inner_fold[k][i] == static_cast<int>(j)) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::inner_train_indices(std::size_t k, std::size_t j) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < outer_fold.size(); ++i) {
        const int f = inner_fold[k][i];
        if (f >= 0 && f != static_cast<int>(j)) out.push_back(i);
    }
    return out;
}

std::string FoldPlan::fingerprint() const {
    std::ostringstream os;
    write_fold_plan(os, *this);
    return hex64(fnv1a(os.str()));
}

void write_fold_plan(std::ostream& out, const FoldPlan& plan) {
    for (std::size_t i = 0; i < plan.doc_ids.size(); ++i) {
        out << plan.doc_ids[i] << '\t' << plan.outer_fold[i] << '\t';
        for (std::size_t k = 0; k < plan.outer; ++k) {
            if (k) out << ',';
            const int f = plan.inner_fold[k][i];
            if (f < 0) {
                out << '-';
            } else {
                out << f;
            }
        }
        out << '\n';
    }
}

void save_fold_plan(const std::filesystem::path& path, const FoldPlan& plan) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_fold_plan(out, plan);
}

FoldPlan load_fold_plan(const std::filesystem::path& path, const Corpus& corpus,
                        std::size_t inner, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fold plan " + path.string());
    std::unordered_map<std::string, std::pair<int, std::vector<int>>> rows;
    std::size_t line_no = 0;
    bool has_inner = false;
    int max_outer = -1;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line.front() == '#') continue;
        const auto f = split(line, '\t');
        if (f.size() < 2 || f.size() > 3) {
            throw FormatError("fold plan line " + std::to_string(line_no) + ": expected 2 or 3 fields");
        }
        const int outer_fold = static_cast<int>(parse_int(f[1]));
        if (outer_fold < 0) throw FormatError("fold plan line " + std::to_string(line_no) + ": negative fold");
        max_outer = std::max(max_outer, outer_fold);
        std::vector<int> inner_folds;
        if (f.size() == 3) {
            has_inner = true;
            for (const auto& v : split(f[2], ',')) {
                inner_folds.push_back(trim(v) == "-" ? -1 : static_cast<int>(parse_int(v)));
            }
        }
        if (!rows.emplace(trim(f[0]), std::make_pair(outer_fold, std::move(inner_folds))).second) {
            throw IntegrityError("fold plan lists '" + f[0] + "' twice");
        }
    }
    FoldPlan plan;
    plan.outer = static_cast<std::size_t>(max_outer + 1);
    plan.seed = seed;
    for (const auto& d : corpus.documents) {
        const auto it = rows.find(d.id);
        if (it == rows.end()) {
            throw IntegrityError("fold plan has no entry for document '" + d.id + "'");
        }
        plan.doc_ids.push_back(d.id);
        plan.outer_fold.push_back(it->second.first);
    }
    if (rows.size() != corpus.size()) {
        throw IntegrityError("fold plan lists documents that are not in the corpus");
    }
    if (has_inner) {
        plan.inner_fold.assign(plan.outer, std::vector<int>(corpus.size(), -1));
        int max_inner = -1;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const auto& inner_folds = rows[plan.doc_ids[i]].second;
            if (inner_folds.size() != plan.outer) {
                throw FormatError("fold plan entry for '" + plan.doc_ids[i] + "' needs " +
                                  std::to_string(plan.outer) + " inner folds");
            }
            for (std::size_t k = 0; k < plan.outer; ++k) {
                const bool held_out = plan.outer_fold[i] == static_cast<int>(k);
                if (held_out != (inner_folds[k] < 0)) {
                    throw FormatError("fold plan entry for '" + plan.doc_ids[i] +
                                      "' is inconsistent with its outer fold");
                }
                plan.inner_fold[k][i] = inner_folds[k];
                max_inner = std::max(max_inner, inner_folds[k]);
            }
        }
        plan.inner = static_cast<std::size_t>(max_inner + 1);
    } else {
        plan.inner = inner;
        fill_inner(plan, binary_labels(corpus));
    }
    return plan;
}

}  // namespace complaints
