#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "cma/experiment.hpp"

namespace cma {

namespace {

struct Token {
    std::string text;
    int line = 0;
    int column = 0;
};

std::string trim(const std::string& s, std::size_t* lead = nullptr) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    if (lead) *lead = a;
    return s.substr(a, b - a);
}

double parse_number(const Token& t) {
    const std::string s = trim(t.text);
    auto plain = [&](const std::string& x) {
        double v = 0;
        const char* b = x.data();
        const char* e = x.data() + x.size();
        if (!x.empty() && *b == '+') ++b;
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || p != e || x.empty() || !std::isfinite(v))
            throw ConfigError(t.line, t.column, "expected a number, got '" + x + "'");
        return v;
    };
    const auto caret = s.find('^');
    if (caret != std::string::npos) return std::pow(plain(s.substr(0, caret)), plain(s.substr(caret + 1)));
    return plain(s);
}

int parse_int(const Token& t) {
    const double v = parse_number(t);
    if (v != std::floor(v) || std::fabs(v) > 1e9) throw ConfigError(t.line, t.column, "expected an integer");
    return static_cast<int>(v);
}

std::vector<Token> split(const Token& t, char sep) {
    std::vector<Token> out;
    std::size_t start = 0;
    const std::string& s = t.text;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        const std::string piece = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        std::size_t lead = 0;
        const std::string tr = trim(piece, &lead);
        if (!tr.empty()) out.push_back({tr, t.line, t.column + static_cast<int>(start + lead)});
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<double> parse_list(const Token& t) {
    std::vector<double> v;
    for (const auto& p : split(t, ',')) v.push_back(parse_number(p));
    if (v.empty()) throw ConfigError(t.line, t.column, "expected a comma-separated list");
    return v;
}

// "key:value key:value" attribute sets.
std::map<std::string, Token> parse_attributes(const Token& t, const std::set<std::string>& allowed) {
    std::map<std::string, Token> out;
    for (const auto& w : split(t, ' ')) {
        const auto colon = w.text.find(':');
        if (colon == std::string::npos) throw ConfigError(w.line, w.column, "expected key:value, got '" + w.text + "'");
        const std::string k = w.text.substr(0, colon);
        if (!allowed.count(k)) throw ConfigError(w.line, w.column, "unknown attribute '" + k + "'");
        if (out.count(k)) throw ConfigError(w.line, w.column, "duplicate attribute '" + k + "'");
        out[k] = {w.text.substr(colon + 1), w.line, w.column + static_cast<int>(colon) + 1};
    }
    return out;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s;
}

struct Entry {
    std::string key;
    Token value;
    Token key_token;
};

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"scenario", {"name", "description"}},
        {"torus", {"n", "N"}},
        {"alpha", {"t", "eps0"}},
        {"psi1", {"constant", "cos", "sin", "logdet_cos", "logdet_sin", "pole"}},
        {"psi2", {"constant", "cos", "sin", "logdet_cos", "logdet_sin", "pole"}},
        {"hypothesis", {"p"}},
        {"continuation", {"eps", "eps_max", "eps_min", "eps_ratio", "tol"}},
        {"estimates",
         {"C", "gamma", "exclusion_radii", "kondrakov_q", "kondrakov_d", "cauchy_tol", "siu_C", "siu_tol",
          "patch_center", "patch_halfwidth"}},
        {"output", {"directory", "formats", "fields"}},
    };
    return s;
}

bool repeatable(const std::string& key) {
    return key == "cos" || key == "sin" || key == "logdet_cos" || key == "logdet_sin" || key == "pole";
}


TrigTerm parse_term(const Token& t, int n, bool cos_term) {
    auto attrs = parse_attributes(t, {"k", "amp"});
    if (!attrs.count("k") || !attrs.count("amp")) throw ConfigError(t.line, t.column, "term needs k:... and amp:...");
    TrigTerm term;
    const auto ks = split(attrs["k"], ',');
    if (static_cast<int>(ks.size()) != 2 * n)
        throw ConfigError(attrs["k"].line, attrs["k"].column, "wavevector needs " + std::to_string(2 * n) + " entries");
    for (int a = 0; a < 2 * n; ++a) term.k[a] = parse_int(ks[a]);
    (cos_term ? term.a_cos : term.a_sin) = parse_number(attrs["amp"]);
    return term;
}

Pole parse_pole(const Token& t, int n) {
    auto attrs = parse_attributes(t, {"weight", "center", "s", "profile", "r0", "r1"});
    if (!attrs.count("weight") || !attrs.count("center"))
        throw ConfigError(t.line, t.column, "pole needs weight:... and center:...");
    Pole p;
    p.weight = parse_number(attrs["weight"]);
    const auto c = parse_list(attrs["center"]);
    if (static_cast<int>(c.size()) != 2 * n)
        throw ConfigError(attrs["center"].line, attrs["center"].column,
                          "center needs " + std::to_string(2 * n) + " coordinates");
    for (int a = 0; a < 2 * n; ++a) p.center[a] = c[a];
    if (attrs.count("s")) p.s = parse_number(attrs["s"]);
    if (attrs.count("profile")) {
        const auto& v = attrs["profile"];
        if (v.text == "cutoff")
            p.profile = PoleProfile::cutoff;
        else if (v.text == "periodic")
            p.profile = PoleProfile::periodic;
        else
            throw ConfigError(v.line, v.column, "profile must be 'cutoff' or 'periodic'");
    }
    if (attrs.count("r0")) p.r0 = parse_number(attrs["r0"]);
    if (attrs.count("r1")) p.r1 = parse_number(attrs["r1"]);
    return p;
}

std::string render_model(const std::string& sec, const QuasiPshModel& m) {
    std::string s = "[" + sec + "]\n";
    s += "constant = " + num(m.smooth.constant) + "\n";
    auto terms = [&](const TrigPoly& tp, const std::string& prefix) {
        for (const auto& t : tp.terms) {
            std::string k;
            for (int a = 0; a < 2 * m.n; ++a) k += (a ? "," : "") + std::to_string(t.k[a]);
            if (t.a_cos != 0.0) s += prefix + "cos = k:" + k + " amp:" + num(t.a_cos) + "\n";
            if (t.a_sin != 0.0) s += prefix + "sin = k:" + k + " amp:" + num(t.a_sin) + "\n";
        }
    };
    terms(m.smooth, "");
    if (m.logdet_of) terms(*m.logdet_of, "logdet_");
    for (const auto& p : m.poles) {
        std::vector<double> c(p.center.begin(), p.center.begin() + 2 * m.n);
        s += "pole = weight:" + num(p.weight) + " center:" + join(c) + " s:" + num(p.s) +
             " profile:" + (p.profile == PoleProfile::cutoff ? "cutoff" : "periodic");
        if (p.profile == PoleProfile::cutoff) s += " r0:" + num(p.r0) + " r1:" + num(p.r1);
        s += "\n";
    }
    return s;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ParsedConfig parse_config(const std::string& text, const ParseOptions& opt) {
    // Pass 1: syntax.
    std::map<std::string, std::vector<Entry>> sections;
    std::set<std::string> seen_sections;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::size_t lead = 0;
        const std::string tl = trim(line, &lead);
        if (tl.empty()) continue;
        const int col = static_cast<int>(lead) + 1;
        if (tl.front() == '[') {
            if (tl.back() != ']') throw ConfigError(lineno, col, "unterminated section header");
            current = trim(tl.substr(1, tl.size() - 2));
            if (!schema().count(current)) throw ConfigError(lineno, col + 1, "unknown section [" + current + "]");
            if (seen_sections.count(current)) throw ConfigError(lineno, col, "duplicate section [" + current + "]");
            seen_sections.insert(current);
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(lineno, col, "expected key = value");
        if (current.empty()) throw ConfigError(lineno, col, "key outside of any section");
        std::size_t klead = 0, vlead = 0;
        const std::string key = trim(line.substr(0, eq), &klead);
        const std::string value = trim(line.substr(eq + 1), &vlead);
        const int kcol = static_cast<int>(klead) + 1;
        const int vcol = static_cast<int>(eq + 1 + vlead) + 1;
        if (key.empty()) throw ConfigError(lineno, col, "empty key");
        if (!schema().at(current).count(key))
            throw ConfigError(lineno, kcol, "unknown key '" + key + "' in [" + current + "]");
        auto& entries = sections[current];
        if (!repeatable(key))
            for (const auto& e : entries)
                if (e.key == key)
                    throw ConfigError(lineno, kcol, "duplicate key '" + key + "' (first at line " +
                                                         std::to_string(e.key_token.line) + ")");
        if (value.empty()) throw ConfigError(lineno, vcol, "empty value for '" + key + "'");
        entries.push_back({key, {value, lineno, vcol}, {key, lineno, kcol}});
    }

    auto get = [&](const std::string& sec, const std::string& key) -> const Entry* {
        auto it = sections.find(sec);
        if (it == sections.end()) return nullptr;
        for (const auto& e : it->second)
            if (e.key == key) return &e;
        return nullptr;
    };
    auto number_or = [&](const std::string& sec, const std::string& key, double def) {
        const Entry* e = get(sec, key);
        return e ? parse_number(e->value) : def;
    };
    auto semantic = [&](const std::string& sec, const std::string& key, const std::string& msg) {
        const Entry* e = get(sec, key);
        return ConfigError(e ? e->value.line : 0, e ? e->value.column : 0, msg);
    };

    // Pass 2: values.
    ParsedConfig cfg;
    Scenario& sc = cfg.scenario;
    sc.name = get("scenario", "name") ? get("scenario", "name")->value.text : "unnamed";
    for (char c : sc.name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'))
            throw semantic("scenario", "name", "scenario name may contain only letters, digits, '-' and '_'");
    const std::string description = get("scenario", "description") ? get("scenario", "description")->value.text : "";

    const int n = get("torus", "n") ? parse_int(get("torus", "n")->value) : 1;
    int N = get("torus", "N") ? parse_int(get("torus", "N")->value) : 64;
    if (opt.resolution_override) N = *opt.resolution_override;
    try {
        sc.spec = TorusSpec(n, N);
    } catch (const InputError& e) {
        throw semantic("torus", get("torus", "n") && (n != 1 && n != 2) ? "n" : "N", e.what());
    }

    sc.alpha.n = n;
    sc.alpha.t = number_or("alpha", "t", 0.0);
    sc.alpha.eps0 = number_or("alpha", "eps0", 0.25);
    if (!(sc.alpha.t >= 0 && sc.alpha.t <= 1)) throw semantic("alpha", "t", "t must lie in [0, 1]");
    if (!(sc.alpha.eps0 > 0)) throw semantic("alpha", "eps0", "eps0 must be positive");

    for (const std::string sec : {"psi1", "psi2"}) {
        QuasiPshModel& m = sec == "psi1" ? sc.psi1 : sc.psi2;
        m.n = n;
        auto it = sections.find(sec);
        if (it == sections.end()) continue;
        for (const auto& e : it->second) {
            if (e.key == "constant") {
                m.smooth.constant = parse_number(e.value);
            } else if (e.key == "cos" || e.key == "sin") {
                m.smooth.terms.push_back(parse_term(e.value, n, e.key == "cos"));
            } else if (e.key == "logdet_cos" || e.key == "logdet_sin") {
                if (!m.logdet_of) m.logdet_of = TrigPoly{};
                m.logdet_of->terms.push_back(parse_term(e.value, n, e.key == "logdet_cos"));
            } else if (e.key == "pole") {
                Pole p = parse_pole(e.value, n);
                QuasiPshModel probe;
                probe.n = n;
                probe.poles = {p};
                try {
                    probe.validate();
                } catch (const InputError& err) {
                    throw ConfigError(e.value.line, e.value.column, err.what());
                }
                m.poles.push_back(p);
            }
        }
        try {
            m.validate();
        } catch (const InputError& err) {
            throw ConfigError(it->second.empty() ? 0 : it->second.front().key_token.line, 1,
                              "[" + sec + "]: " + err.what());
        }
    }

    sc.p = number_or("hypothesis", "p", 2.0);
    if (!(sc.p > 1)) throw semantic("hypothesis", "p", "p must be > 1");

    if (const Entry* e = get("continuation", "eps")) {
        if (get("continuation", "eps_max") || get("continuation", "eps_min") || get("continuation", "eps_ratio"))
            throw ConfigError(e->key_token.line, e->key_token.column, "give either eps or eps_max/eps_min/eps_ratio");
        sc.eps_schedule = parse_list(e->value);
    } else {
        const double emax = number_or("continuation", "eps_max", 0.25);
        const double emin = number_or("continuation", "eps_min", std::ldexp(1.0, -12));
        const double ratio = number_or("continuation", "eps_ratio", 0.5);
        if (!(ratio > 0 && ratio < 1)) throw semantic("continuation", "eps_ratio", "eps_ratio must lie in (0, 1)");
        if (!(emin > 0 && emin <= emax)) throw semantic("continuation", "eps_min", "need 0 < eps_min <= eps_max");
        for (double e = emax; e >= emin * (1 - 1e-9); e *= ratio) sc.eps_schedule.push_back(e);
    }
    if (sc.eps_schedule.front() > 0.5) throw semantic("continuation", "eps", "eps schedule must have max <= 0.5");
    for (std::size_t i = 0; i < sc.eps_schedule.size(); ++i) {
        if (!(sc.eps_schedule[i] > 0)) throw semantic("continuation", "eps", "eps values must be positive");
        if (i && !(sc.eps_schedule[i] < sc.eps_schedule[i - 1]))
            throw semantic("continuation", "eps", "eps schedule must be strictly decreasing");
    }
    sc.tol = number_or("continuation", "tol", 1e-10);
    if (!(sc.tol > 0)) throw semantic("continuation", "tol", "tol must be positive");

    auto& es = sc.estimates;
    if (const Entry* e = get("estimates", "C")) {
        sc.C_override = parse_number(e->value);
        if (*sc.C_override < 0) throw semantic("estimates", "C", "C must be >= 0");
    }
    if (const Entry* e = get("estimates", "gamma")) es.gammas = parse_list(e->value);
    for (double g : es.gammas)
        if (!(g > 0 && g < 1)) throw semantic("estimates", "gamma", "gamma values must lie in (0, 1)");
    if (const Entry* e = get("estimates", "exclusion_radii")) es.exclusion_radii = parse_list(e->value);
    for (double r : es.exclusion_radii)
        if (!(r >= 2)) throw semantic("estimates", "exclusion_radii", "exclusion radii are in units of h and must be >= 2");
    es.kondrakov_q = number_or("estimates", "kondrakov_q", es.kondrakov_q);
    if (!(es.kondrakov_q >= 1)) throw semantic("estimates", "kondrakov_q", "kondrakov_q must be >= 1");
    es.kondrakov_d = number_or("estimates", "kondrakov_d", es.kondrakov_d);
    if (!(es.kondrakov_d >= 0)) throw semantic("estimates", "kondrakov_d", "kondrakov_d must be >= 0");
    es.cauchy_tol = number_or("estimates", "cauchy_tol", es.cauchy_tol);
    es.siu_C = number_or("estimates", "siu_C", es.siu_C);
    es.siu_tol = number_or("estimates", "siu_tol", es.siu_tol);
    if (const Entry* e = get("estimates", "patch_center")) {
        const auto c = parse_list(e->value);
        if (static_cast<int>(c.size()) != 2 * n)
            throw ConfigError(e->value.line, e->value.column, "patch_center needs " + std::to_string(2 * n) + " coordinates");
        for (int a = 0; a < 2 * n; ++a) es.patch_center[a] = c[a];
    }
    es.patch_halfwidth = number_or("estimates", "patch_halfwidth", es.patch_halfwidth);
    if (get("estimates", "patch_halfwidth") && !(es.patch_halfwidth > 0 && es.patch_halfwidth <= 0.5))
        throw semantic("estimates", "patch_halfwidth", "patch_halfwidth must lie in (0, 1/2]");

    if (const Entry* e = get("output", "directory")) cfg.output.directory = e->value.text;
    if (const Entry* e = get("output", "formats")) {
        cfg.output.formats.clear();
        for (const auto& f : split(e->value, ',')) {
            if (f.text != "csv" && f.text != "txt") throw ConfigError(f.line, f.column, "formats are csv and txt");
            cfg.output.formats.push_back(f.text);
        }
    }
    if (const Entry* e = get("output", "fields")) {
        if (e->value.text == "true")
            cfg.output.write_fields = true;
        else if (e->value.text == "false")
            cfg.output.write_fields = false;
        else
            throw ConfigError(e->value.line, e->value.column, "fields must be true or false");
    }

    try {
        sc.validate();
    } catch (const InputError& e) {
        throw ConfigError(0, 0, std::string("semantic: ") + e.what());
    }

    // Hypothesis (i) at risk: p nu >= n at a psi2 pole centre.
    for (const auto& c : pole_centers(sc.psi2)) {
        const double margin = n - sc.p * c.lelong;
        if (margin < kBorderline) {
            std::string at;
            for (int a = 0; a < 2 * n; ++a) at += (a ? "," : "") + num(c.center[a]);
            cfg.notes.push_back("hypothesis (i) at risk: n - p*nu = " + num(margin) + " at center " + at);
        }
    }

    // Canonical echo (before mass balance, so it reflects the document).
    std::string schema_part, grid_part, output_part;
    schema_part += "[scenario]\nname = " + sc.name + "\n";
    if (!description.empty()) schema_part += "description = " + description + "\n";
    schema_part += "[torus]\nn = " + std::to_string(n) + "\n";
    grid_part = "N = " + std::to_string(N) + "\n";
    std::string rest;
    rest += "[alpha]\nt = " + num(sc.alpha.t) + "\neps0 = " + num(sc.alpha.eps0) + "\n";
    rest += render_model("psi1", sc.psi1);
    rest += render_model("psi2", sc.psi2);
    rest += "[hypothesis]\np = " + num(sc.p) + "\n";
    rest += "[continuation]\neps = " + join(sc.eps_schedule) + "\ntol = " + num(sc.tol) + "\n";
    rest += "[estimates]\n";
    rest += "C = " + (sc.C_override ? num(*sc.C_override) : std::string("auto")) + "\n";
    rest += "gamma = " + join(es.gammas) + "\n";
    rest += "exclusion_radii = " + join(es.exclusion_radii) + "\n";
    rest += "kondrakov_q = " + num(es.kondrakov_q) + "\nkondrakov_d = " + num(es.kondrakov_d) + "\n";
    rest += "cauchy_tol = " + num(es.cauchy_tol) + "\nsiu_C = " + num(es.siu_C) + "\nsiu_tol = " + num(es.siu_tol) + "\n";
    rest += "patch_center = " + join(std::vector<double>(es.patch_center.begin(), es.patch_center.begin() + 2 * n)) + "\n";
    rest += "patch_halfwidth = " + num(es.patch_halfwidth) + "\n";
    output_part = "[output]\ndirectory = " + cfg.output.directory + "\nformats = ";
    for (std::size_t i = 0; i < cfg.output.formats.size(); ++i) output_part += (i ? "," : "") + cfg.output.formats[i];
    output_part += std::string("\nfields = ") + (cfg.output.write_fields ? "true" : "false") + "\n";
    cfg.echo = schema_part + grid_part + rest + output_part;
    cfg.hash = fnv1a64(cfg.echo);
    cfg.schema_hash = fnv1a64(schema_part + rest);

    if (opt.prepare) {
        try {
            sc = enforce_mass_balance(sc);
        } catch (const InputError& e) {
            throw ConfigError(0, 0, std::string("hypothesis (ii): ") + e.what());
        }
        sc.C = resolve_constant(sc);
    }
    return cfg;
}

}  // namespace cma
