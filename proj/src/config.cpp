#include "corrgap/config.hpp"

#include <cctype>
#include <cstdlib>
#include <set>

namespace corrgap::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// strips an unquoted trailing comment
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

Value parse_scalar(const std::string& tok, int line_no) {
    Value v;
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
        v.kind = Value::Kind::kString;
        v.str = tok.substr(1, tok.size() - 2);
        return v;
    }
    if (tok == "true" || tok == "false") {
        v.kind = Value::Kind::kBool;
        v.boolean = tok == "true";
        return v;
    }
    char* end = nullptr;
    v.number = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw ConfigError("line " + std::to_string(line_no) +
                          ": cannot parse value '" + tok + "'");
    return v;
}

Value parse_value(const std::string& raw, int line_no) {
    std::string tok = trim(raw);
    if (tok.empty())
        throw ConfigError("line " + std::to_string(line_no) + ": empty value");
    if (tok.front() == '[') {
        if (tok.back() != ']')
            throw ConfigError("line " + std::to_string(line_no) +
                              ": unterminated array");
        Value v;
        v.kind = Value::Kind::kArray;
        std::string body = tok.substr(1, tok.size() - 2);
        std::string item;
        bool in_string = false;
        for (char ch : body) {
            if (ch == '"') in_string = !in_string;
            if (ch == ',' && !in_string) {
                v.array.push_back(parse_scalar(trim(item), line_no));
                item.clear();
            } else {
                item += ch;
            }
        }
        if (!trim(item).empty())
            v.array.push_back(parse_scalar(trim(item), line_no));
        else if (!v.array.empty())
            throw ConfigError("line " + std::to_string(line_no) +
                              ": trailing comma in array");
        return v;
    }
    return parse_scalar(tok, line_no);
}

}  // namespace

Document parse_toml(const std::string& text) {
    Document doc;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(
            pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": empty section name");
            doc[section];
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (doc[section].count(key))
            throw ConfigError("line " + std::to_string(line_no) +
                              ": duplicate key '" + key + "'");
        doc[section][key] = parse_value(line.substr(eq + 1), line_no);
    }
    return doc;
}

namespace {

// Typed extraction that records which keys were consumed so leftovers can be
// reported as unknown.
struct SectionReader {
    const Section& section;
    std::string name;
    std::set<std::string> used;

    const Value* find(const std::string& key) {
        auto it = section.find(key);
        if (it == section.end()) return nullptr;
        used.insert(key);
        return &it->second;
    }

    std::string where(const std::string& key) const {
        return name.empty() ? key : name + "." + key;
    }

    double number(const std::string& key, double fallback) {
        const Value* v = find(key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::kNumber)
            throw ConfigError(where(key) + " must be a number");
        return v->number;
    }

    int integer(const std::string& key, int fallback) {
        double x = number(key, static_cast<double>(fallback));
        int i = static_cast<int>(x);
        if (static_cast<double>(i) != x)
            throw ConfigError(where(key) + " must be an integer");
        return i;
    }

    std::vector<double> numbers(const std::string& key,
                                std::vector<double> fallback) {
        const Value* v = find(key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::kArray)
            throw ConfigError(where(key) + " must be an array");
        std::vector<double> out;
        for (const auto& e : v->array) {
            if (e.kind != Value::Kind::kNumber)
                throw ConfigError(where(key) + " must hold numbers");
            out.push_back(e.number);
        }
        return out;
    }

    std::vector<std::string> strings(const std::string& key,
                                     std::vector<std::string> fallback) {
        const Value* v = find(key);
        if (!v) return fallback;
        if (v->kind != Value::Kind::kArray)
            throw ConfigError(where(key) + " must be an array");
        std::vector<std::string> out;
        for (const auto& e : v->array) {
            if (e.kind != Value::Kind::kString)
                throw ConfigError(where(key) + " must hold strings");
            out.push_back(e.str);
        }
        return out;
    }

    void finish() const {
        for (const auto& [key, value] : section) {
            (void)value;
            if (!used.count(key))
                throw ConfigError("unknown key '" + where(key) + "'");
        }
    }
};

SectionReader reader(const Document& doc, const std::string& name) {
    static const Section kEmpty;
    auto it = doc.find(name);
    return SectionReader{it == doc.end() ? kEmpty : it->second, name, {}};
}

void check_sections(const Document& doc, const std::set<std::string>& allowed) {
    for (const auto& [name, section] : doc) {
        (void)section;
        if (!allowed.count(name))
            throw ConfigError("unknown section [" + name + "]");
    }
}

}  // namespace

harness::SweepConfig sweep_config_from_toml(const std::string& text) {
    Document doc = parse_toml(text);
    check_sections(doc, {"", "dist", "train"});
    harness::SweepConfig cfg;

    SectionReader root = reader(doc, "");
    cfg.rho_values = root.numbers("rho_values", cfg.rho_values);
    {
        std::vector<double> fallback(cfg.seeds.begin(), cfg.seeds.end());
        std::vector<double> seeds = root.numbers("seeds", fallback);
        cfg.seeds.clear();
        for (double s : seeds) {
            if (s < 0 || s != static_cast<double>(static_cast<std::uint64_t>(s)))
                throw ConfigError("seeds must be nonnegative integers");
            cfg.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    cfg.samples = root.integer("samples", cfg.samples);
    cfg.test_count = root.integer("test_count", cfg.test_count);
    cfg.parallelism = root.integer("parallelism", cfg.parallelism);
    root.finish();

    SectionReader dist = reader(doc, "dist");
    cfg.dist.n = dist.integer("n", cfg.dist.n);
    cfg.dist.m = dist.integer("m", cfg.dist.m);
    cfg.dist.k = dist.integer("k", cfg.dist.k);
    cfg.dist.rho = dist.number("rho", cfg.dist.rho);
    cfg.dist.sigma_li = dist.number("sigma_li", cfg.dist.sigma_li);
    cfg.dist.sigma_t = dist.number("sigma_t", cfg.dist.sigma_t);
    cfg.dist.sigma_d = dist.number("sigma_d", cfg.dist.sigma_d);
    cfg.dist.mu_f1 = dist.number("mu_f1", cfg.dist.mu_f1);
    cfg.dist.mu_f2 = dist.number("mu_f2", cfg.dist.mu_f2);
    cfg.dist.mu_d = dist.number("mu_d", cfg.dist.mu_d);
    dist.finish();

    SectionReader train = reader(doc, "train");
    cfg.train.lr = train.number("lr", cfg.train.lr);
    cfg.train.iterations = train.integer("iterations", cfg.train.iterations);
    cfg.train.zeta = train.number("zeta", cfg.train.zeta);
    cfg.train.adam_beta1 = train.number("adam_beta1", cfg.train.adam_beta1);
    cfg.train.adam_beta2 = train.number("adam_beta2", cfg.train.adam_beta2);
    cfg.train.adam_eps = train.number("adam_eps", cfg.train.adam_eps);
    train.finish();

    cfg.validate();
    return cfg;
}

harness::SweepConfig load_sweep_config(const std::string& path) {
    return sweep_config_from_toml(harness::read_file(path));
}

harness::GapSuiteParams gap_params_from_toml(const std::string& text) {
    Document doc = parse_toml(text);
    check_sections(doc, {""});
    harness::GapSuiteParams params;
    SectionReader root = reader(doc, "");
    {
        std::vector<double> fallback(params.product_d.begin(),
                                     params.product_d.end());
        std::vector<double> ds = root.numbers("product_d", fallback);
        params.product_d.clear();
        for (double d : ds) {
            if (d < 1 || d != static_cast<double>(static_cast<int>(d)))
                throw ConfigError("product_d must hold positive integers");
            params.product_d.push_back(static_cast<int>(d));
        }
    }
    params.big_n = root.number("big_n", params.big_n);
    params.eps = root.number("eps", params.eps);
    params.constant = root.number("constant", params.constant);
    params.gammas = root.strings("gammas", params.gammas);
    params.witness_grid = root.numbers("witness_grid", params.witness_grid);
    params.prop1_c = root.number("prop1_c", params.prop1_c);
    params.prop1_eps = root.number("prop1_eps", params.prop1_eps);
    params.grid_step = root.number("grid_step", params.grid_step);
    root.finish();
    return params;
}

harness::GapSuiteParams load_gap_params(const std::string& path) {
    return gap_params_from_toml(harness::read_file(path));
}

}  // namespace corrgap::config
