#include "flowwarden/model_io.hpp"

#include <sstream>
#include <stdexcept>

#include "flowwarden/textio.hpp"

namespace fw {

namespace {

constexpr const char* kHeader = "#flowwarden-model v1";

}  // namespace

std::string format_rulebase(const RuleBase& base) {
    std::string out;
    out += kHeader;
    out += '\n';

    const FcmConfig& cfg = base.fcm.config;
    out += "fcm.c=" + std::to_string(cfg.cluster_count) + '\n';
    out += "fcm.m=" + dec17(cfg.fuzziness) + '\n';
    out += "fcm.epsilon=" + dec17(cfg.epsilon) + '\n';
    out += "fcm.max_iters=" + std::to_string(cfg.max_iters) + '\n';
    out += "fcm.seed=" + std::to_string(cfg.seed) + '\n';
    out += "fcm.alt_exponent=" + std::string(cfg.alt_exponent ? "1" : "0") + '\n';
    out += "window.n_conn=" + std::to_string(base.window.n_conn) + '\n';

    out += "schema " + std::to_string(base.schema.size()) + '\n';
    for (int k = 0; k < base.schema.size(); ++k) {
        out += "feature\t" + feature_name(base.schema.features()[static_cast<std::size_t>(k)]);
        if (base.schema.bounds_learned()) {
            out += '\t' + dec17(base.schema.lower_bounds()[k]) + '\t' +
                   dec17(base.schema.upper_bounds()[k]);
        }
        out += '\n';
    }

    out += "centers " + std::to_string(base.fcm.centers.rows()) + ' ' +
           std::to_string(base.fcm.centers.cols()) + '\n';
    for (Eigen::Index i = 0; i < base.fcm.centers.rows(); ++i) {
        out += "center";
        for (Eigen::Index k = 0; k < base.fcm.centers.cols(); ++k) {
            out += '\t' + dec17(base.fcm.centers(i, k));
        }
        out += '\n';
    }

    out += "rules " + std::to_string(base.rules.size()) + '\n';
    for (std::size_t i = 0; i < base.rules.size(); ++i) {
        const FuzzyRule& r = base.rules[i];
        out += "rule " + std::to_string(i) + "\tlabel=" + to_string(r.label) +
               "\tdegenerate=" + (r.degenerate ? "1" : "0") + '\n';
        for (const auto& a : r.antecedents) {
            out += "ante\t" + dec17(a.a) + '\t' + dec17(a.b) + '\t' + dec17(a.c) + '\n';
        }
        out += "cons\t" + dec17(r.consequent.a) + '\t' + dec17(r.consequent.b) + '\t' +
               dec17(r.consequent.c) + '\n';
        out += "evidence\t" + r.evidence + '\n';
    }
    return out;
}

namespace {

class LineReader {
public:
    explicit LineReader(const std::string& text) : text_(text) {}

    bool next(std::string& line) {
        while (pos_ < text_.size()) {
            std::size_t end = text_.find('\n', pos_);
            if (end == std::string::npos) end = text_.size();
            line = text_.substr(pos_, end - pos_);
            pos_ = end + 1;
            ++line_no_;
            if (!line.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw std::runtime_error("model file line " + std::to_string(line_no_) + ": " + why);
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

}  // namespace

RuleBase parse_rulebase(const std::string& text) {
    LineReader reader(text);
    std::string line;
    if (!reader.next(line) || line != kHeader) {
        throw std::runtime_error("not a flowwarden model file (bad header)");
    }

    RuleBase base;
    FcmConfig cfg;
    int schema_size = -1;
    std::vector<FeatureKey> features;
    Eigen::VectorXd lo, hi;
    bool have_bounds = false;
    Eigen::Index rule_cursor = -1;
    Eigen::Index center_cursor = 0;

    while (reader.next(line)) {
        if (line.rfind("fcm.", 0) == 0) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) reader.fail("bad fcm line");
            const std::string key = line.substr(0, eq);
            const std::string val = line.substr(eq + 1);
            if (key == "fcm.c") cfg.cluster_count = parse_int(val, "fcm.c");
            else if (key == "fcm.m") cfg.fuzziness = parse_double(val, "fcm.m");
            else if (key == "fcm.epsilon") cfg.epsilon = parse_double(val, "fcm.epsilon");
            else if (key == "fcm.max_iters") cfg.max_iters = parse_int(val, "fcm.max_iters");
            else if (key == "fcm.seed") cfg.seed = parse_u64(val, "fcm.seed");
            else if (key == "fcm.alt_exponent") cfg.alt_exponent = val == "1";
            else reader.fail("unknown fcm key: " + key);
        } else if (line.rfind("window.n_conn=", 0) == 0) {
            base.window.n_conn = parse_int(line.substr(14), "window.n_conn");
        } else if (line.rfind("schema ", 0) == 0) {
            schema_size = parse_int(line.substr(7), "schema size");
            features.reserve(static_cast<std::size_t>(schema_size));
            lo.resize(schema_size);
            hi.resize(schema_size);
        } else if (line.rfind("feature\t", 0) == 0) {
            auto fields = split_fields(line);
            if (fields.size() != 2 && fields.size() != 4) reader.fail("bad feature line");
            features.push_back(parse_feature_key(fields[1]));
            if (fields.size() == 4) {
                const auto k = static_cast<Eigen::Index>(features.size()) - 1;
                lo[k] = parse_double(fields[2], "feature lower bound");
                hi[k] = parse_double(fields[3], "feature upper bound");
                have_bounds = true;
            }
        } else if (line.rfind("centers ", 0) == 0) {
            auto fields = split_fields(line.substr(8), ' ');
            if (fields.size() != 2) reader.fail("bad centers line");
            base.fcm.centers.resize(parse_int(fields[0], "center rows"),
                                    parse_int(fields[1], "center cols"));
        } else if (line.rfind("center\t", 0) == 0) {
            auto fields = split_fields(line);
            if (static_cast<Eigen::Index>(fields.size()) - 1 != base.fcm.centers.cols()) {
                reader.fail("center width mismatch");
            }
            if (center_cursor >= base.fcm.centers.rows()) reader.fail("too many center lines");
            for (Eigen::Index k = 0; k < base.fcm.centers.cols(); ++k) {
                base.fcm.centers(center_cursor, k) =
                    parse_double(fields[static_cast<std::size_t>(k) + 1], "center value");
            }
            ++center_cursor;
        } else if (line.rfind("rules ", 0) == 0) {
            base.rules.resize(static_cast<std::size_t>(parse_int(line.substr(6), "rule count")));
        } else if (line.rfind("rule ", 0) == 0) {
            ++rule_cursor;
            if (rule_cursor >= static_cast<Eigen::Index>(base.rules.size())) {
                reader.fail("too many rule blocks");
            }
            auto fields = split_fields(line);
            FuzzyRule& r = base.rules[static_cast<std::size_t>(rule_cursor)];
            for (const auto& f : fields) {
                if (f.rfind("label=", 0) == 0) r.label = parse_label(f.substr(6));
                if (f.rfind("degenerate=", 0) == 0) r.degenerate = f.substr(11) == "1";
            }
        } else if (line.rfind("ante\t", 0) == 0) {
            if (rule_cursor < 0) reader.fail("antecedent before rule");
            auto fields = split_fields(line);
            if (fields.size() != 4) reader.fail("bad antecedent line");
            base.rules[static_cast<std::size_t>(rule_cursor)].antecedents.push_back(
                {parse_double(fields[1], "a"), parse_double(fields[2], "b"),
                 parse_double(fields[3], "c")});
        } else if (line.rfind("cons\t", 0) == 0) {
            if (rule_cursor < 0) reader.fail("consequent before rule");
            auto fields = split_fields(line);
            if (fields.size() != 4) reader.fail("bad consequent line");
            base.rules[static_cast<std::size_t>(rule_cursor)].consequent = {
                parse_double(fields[1], "a"), parse_double(fields[2], "b"),
                parse_double(fields[3], "c")};
        } else if (line.rfind("evidence\t", 0) == 0) {
            if (rule_cursor < 0) reader.fail("evidence before rule");
            base.rules[static_cast<std::size_t>(rule_cursor)].evidence = line.substr(9);
        } else {
            reader.fail("unrecognized line: " + line);
        }
    }

    if (schema_size < 0 || static_cast<int>(features.size()) != schema_size) {
        throw std::runtime_error("model file schema incomplete");
    }
    base.schema = FeatureSchema::from_features(std::move(features));
    if (have_bounds) base.schema.set_bounds(std::move(lo), std::move(hi));
    base.fcm.config = cfg;

    for (auto& rule : base.rules) {
        if (static_cast<int>(rule.antecedents.size()) != schema_size) {
            throw std::runtime_error("rule antecedent count does not match schema");
        }
        rule.defuzz_antecedents.resize(schema_size);
        for (int k = 0; k < schema_size; ++k) {
            rule.defuzz_antecedents[k] = defuzzify(rule.antecedents[static_cast<std::size_t>(k)]);
        }
    }
    return base;
}

void save_rulebase(const RuleBase& base, const std::string& path) {
    write_file(path, format_rulebase(base));
}

RuleBase load_rulebase(const std::string& path) { return parse_rulebase(read_file(path)); }

}  // namespace fw
