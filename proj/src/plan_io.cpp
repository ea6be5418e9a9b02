#include "seqcl/plan_io.hpp"

#include "seqcl/errors.hpp"
#include "seqcl/numeric.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace seqcl {

using json = nlohmann::ordered_json;

std::string PlanDocument::kind() const
{
    if (two_prop())
        return "two-prop";
    return std::string(plan_kind_name(std::get<MultiHypPlan>(plan).kind));
}

namespace {

// ---- writing ----

json real(double x)
{
    if (std::isnan(x))
        return nullptr;
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    return x;
}

json sum_value(std::int64_t k)
{
    if (k == kSumPosInf)
        return "inf";
    if (k == kSumNegInf)
        return "-inf";
    return k;
}

json set_bound(std::int64_t k, std::int64_t empty)
{
    if (k == empty)
        return nullptr;
    return k;
}

json schedule_json(ScheduleKind kind, int stages, const std::vector<std::int64_t>& sizes, std::int64_t n_limit)
{
    json s;
    s["kind"] = schedule_kind_name(kind);
    s["stages"] = stages;
    s["sizes"] = sizes;
    s["n_limit"] = n_limit;
    return s;
}

char label_char(int v)
{
    if (v == kContinue)
        return '-';
    return static_cast<char>(v < 10 ? '0' + v : 'a' + (v - 10));
}

json multi_json(const MultiHypPlan& p)
{
    json j;
    const auto& d = p.design;
    json design;
    design["model"] = d.model.name();
    design["limits"] = d.family.name();
    design["approx_weight"] = d.family.w;
    design["zone_lower"] = d.zone_lower;
    design["zone_upper"] = d.zone_upper;
    design["risks"] = d.risks;
    design["zeta"] = d.zeta;
    design["tie"] = tie_policy_name(d.tie);
    design["schedule"] = schedule_json(p.schedule.kind, p.schedule.stages, p.schedule.sizes, p.schedule.n_limit);
    j["design"] = design;
    json stages = json::array();
    for (const auto& st : p.stages) {
        json s;
        s["n"] = st.n;
        json f = json::array();
        json g = json::array();
        json a = json::array();
        json b = json::array();
        for (std::size_t i = 0; i < st.f_sum.size(); ++i) {
            f.push_back(sum_value(st.f_sum[i]));
            g.push_back(sum_value(st.g_sum[i]));
            a.push_back(set_bound(st.a_sum[i], kSumPosInf));
            b.push_back(set_bound(st.b_sum[i], kSumNegInf));
        }
        s["f_sum"] = f;
        s["g_sum"] = g;
        s["a_sum"] = a;
        s["b_sum"] = b;
        stages.push_back(s);
    }
    j["stages"] = stages;
    return j;
}

json two_prop_json(const TwoPropPlan& p)
{
    json j;
    const auto& d = p.design;
    json design;
    design["zone_lower"] = d.zone_lower;
    design["zone_upper"] = d.zone_upper;
    design["risks"] = d.risks;
    design["zeta"] = d.zeta;
    design["link"] = {{"scale", d.link.scale}, {"offset", d.link.offset}};
    design["schedule"] = schedule_json(d.schedule, d.stages, d.sizes_x, d.n_limit);
    j["design"] = design;
    json stages = json::array();
    for (const auto& st : p.stages) {
        json s;
        s["nx"] = st.nx;
        s["ny"] = st.ny;
        json rows = json::array();
        for (std::int64_t kx = 0; kx <= st.nx; ++kx) {
            std::string row;
            for (std::int64_t ky = 0; ky <= st.ny; ++ky)
                row.push_back(label_char(st.label(kx, ky)));
            rows.push_back(row);
        }
        s["regions"] = rows;
        stages.push_back(s);
    }
    j["stages"] = stages;
    return j;
}

json tuning_json(const TuneRecord& t)
{
    json j;
    j["zeta"] = t.zeta;
    j["iterations"] = t.iterations;
    j["lo"] = t.lo;
    j["hi"] = t.hi;
    json trace = json::array();
    for (const auto& s : t.trace)
        trace.push_back({{"zeta", s.zeta}, {"feasible", s.feasible}, {"score", real(s.score)}});
    j["trace"] = trace;
    j["warnings"] = t.warnings;
    return j;
}

// ---- reading ----

class Node {
public:
    Node(const json& value, std::string path) : v_(value), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& what) const
    {
        throw InputError("plan document: field '" + path_ + "': " + what);
    }

    Node at(const char* key) const
    {
        if (!v_.is_object())
            fail("expected an object");
        const auto it = v_.find(key);
        if (it == v_.end())
            throw InputError("plan document: missing field '" + join(key) + "'");
        return {*it, join(key)};
    }

    bool has(const char* key) const { return v_.is_object() && v_.contains(key); }

    Node at(std::size_t i) const { return {v_.at(i), path_ + "[" + std::to_string(i) + "]"}; }

    std::size_t size() const
    {
        if (!v_.is_array())
            fail("expected an array");
        return v_.size();
    }

    bool is_null() const { return v_.is_null(); }

    double real() const
    {
        if (v_.is_string()) {
            const auto& s = v_.get_ref<const std::string&>();
            if (s == "inf")
                return kInf;
            if (s == "-inf")
                return -kInf;
        }
        if (!v_.is_number())
            fail("expected a number");
        return v_.get<double>();
    }

    double real_or_nan() const { return is_null() ? std::nan("") : real(); }

    std::int64_t integer() const
    {
        if (!v_.is_number_integer())
            fail("expected an integer");
        return v_.get<std::int64_t>();
    }

    std::int64_t sum(bool allow_inf) const
    {
        if (allow_inf && v_.is_string()) {
            const auto& s = v_.get_ref<const std::string&>();
            if (s == "inf")
                return kSumPosInf;
            if (s == "-inf")
                return kSumNegInf;
        }
        return integer();
    }

    std::string text() const
    {
        if (!v_.is_string())
            fail("expected a string");
        return v_.get<std::string>();
    }

    bool boolean() const
    {
        if (!v_.is_boolean())
            fail("expected true or false");
        return v_.get<bool>();
    }

    std::vector<double> reals() const
    {
        std::vector<double> out;
        for (std::size_t i = 0; i < size(); ++i)
            out.push_back(at(i).real());
        return out;
    }

    std::vector<std::int64_t> integers() const
    {
        std::vector<std::int64_t> out;
        for (std::size_t i = 0; i < size(); ++i)
            out.push_back(at(i).integer());
        return out;
    }

    const std::string& path() const { return path_; }

private:
    std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& v_;
    std::string path_;
};

// Converts library errors raised while interpreting a field into InputError.
template <class F>
auto guarded(const Node& n, F&& f)
{
    try {
        return f();
    } catch (const InputError&) {
        throw;
    } catch (const std::exception& e) {
        n.fail(e.what());
    }
}

ScheduleSpec read_schedule(const Node& n)
{
    ScheduleSpec s;
    s.kind = guarded(n.at("kind"), [&] { return schedule_kind_from_name(n.at("kind").text()); });
    s.stages = static_cast<int>(n.at("stages").integer());
    s.sizes = n.at("sizes").integers();
    s.n_limit = n.at("n_limit").integer();
    return s;
}

MultiHypPlan read_multi(const Node& root, PlanKind kind)
{
    MultiHypPlan p;
    p.kind = kind;
    const Node d = root.at("design");
    auto& h = p.design;
    h.model = guarded(d.at("model"), [&] { return model_from_name(d.at("model").text()); });
    const double w = d.at("approx_weight").real();
    h.family = guarded(d.at("limits"), [&] { return limit_family_from_name(d.at("limits").text(), w); });
    h.zone_lower = d.at("zone_lower").reals();
    h.zone_upper = d.at("zone_upper").reals();
    h.risks = d.at("risks").reals();
    h.zeta = d.at("zeta").real();
    h.tie = guarded(d.at("tie"), [&] { return tie_policy_from_name(d.at("tie").text()); });
    p.schedule = read_schedule(d.at("schedule"));
    guarded(d, [&] {
        h.validate();
        return 0;
    });
    const int m = h.hypotheses();
    const Node stages = root.at("stages");
    if (stages.size() == 0)
        stages.fail("a plan needs at least one stage");
    for (std::size_t l = 0; l < stages.size(); ++l) {
        const Node s = stages.at(l);
        StageRule r;
        r.n = s.at("n").integer();
        if (r.n < 1 || (l > 0 && r.n <= p.stages.back().n))
            s.at("n").fail("stage sizes must be positive and strictly increasing");
        auto read_vec = [&](const char* key, std::vector<std::int64_t>& out, std::int64_t empty) {
            const Node v = s.at(key);
            if (v.size() != static_cast<std::size_t>(m + 1))
                v.fail("expected " + std::to_string(m + 1) + " entries");
            for (std::size_t i = 0; i < v.size(); ++i) {
                const Node e = v.at(i);
                out.push_back(empty == 0 ? e.sum(true) : (e.is_null() ? empty : e.integer()));
            }
        };
        read_vec("f_sum", r.f_sum, 0);
        read_vec("g_sum", r.g_sum, 0);
        read_vec("a_sum", r.a_sum, kSumPosInf);
        read_vec("b_sum", r.b_sum, kSumNegInf);
        p.stages.push_back(std::move(r));
    }
    return p;
}

int label_value(char c)
{
    if (c == '-')
        return kContinue;
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'z')
        return 10 + (c - 'a');
    return -2;
}

TwoPropPlan read_two_prop(const Node& root)
{
    TwoPropPlan p;
    const Node d = root.at("design");
    auto& t = p.design;
    t.zone_lower = d.at("zone_lower").reals();
    t.zone_upper = d.at("zone_upper").reals();
    t.risks = d.at("risks").reals();
    t.zeta = d.at("zeta").real();
    const Node link = d.at("link");
    t.link.scale = link.at("scale").real();
    t.link.offset = link.at("offset").integer();
    const ScheduleSpec s = read_schedule(d.at("schedule"));
    t.schedule = s.kind;
    t.stages = s.stages;
    t.sizes_x = s.sizes;
    t.n_limit = s.n_limit;
    guarded(d, [&] {
        t.validate();
        return 0;
    });
    const int m = t.hypotheses();
    const Node stages = root.at("stages");
    if (stages.size() == 0)
        stages.fail("a plan needs at least one stage");
    for (std::size_t l = 0; l < stages.size(); ++l) {
        const Node st = stages.at(l);
        StageRegion r;
        r.nx = st.at("nx").integer();
        r.ny = st.at("ny").integer();
        if (r.nx < 1 || r.ny < 1)
            st.fail("sample sizes must be positive");
        if (l > 0 && (r.nx <= p.stages.back().nx || r.ny <= p.stages.back().ny))
            st.fail("stage sizes must be strictly increasing");
        const Node rows = st.at("regions");
        if (rows.size() != static_cast<std::size_t>(r.nx + 1))
            rows.fail("expected " + std::to_string(r.nx + 1) + " rows");
        for (std::size_t kx = 0; kx < rows.size(); ++kx) {
            const Node row = rows.at(kx);
            const std::string text = row.text();
            if (text.size() != static_cast<std::size_t>(r.ny + 1))
                row.fail("expected " + std::to_string(r.ny + 1) + " labels");
            for (char c : text) {
                const int v = label_value(c);
                if (v == -2 || v >= m)
                    row.fail(std::string("invalid label '") + c + "'");
                r.labels.push_back(static_cast<std::int8_t>(v));
            }
        }
        p.stages.push_back(std::move(r));
    }
    return p;
}

TuneRecord read_tuning(const Node& n)
{
    TuneRecord t;
    t.zeta = n.at("zeta").real();
    t.iterations = static_cast<int>(n.at("iterations").integer());
    t.lo = n.at("lo").real();
    t.hi = n.at("hi").real();
    const Node trace = n.at("trace");
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Node s = trace.at(i);
        t.trace.push_back({s.at("zeta").real(), s.at("feasible").boolean(), s.at("score").real_or_nan()});
    }
    const Node w = n.at("warnings");
    for (std::size_t i = 0; i < w.size(); ++i)
        t.warnings.push_back(w.at(i).text());
    return t;
}

} // namespace

std::string write_plan_document(const PlanDocument& doc)
{
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = doc.kind();
    const json body = doc.two_prop() ? two_prop_json(std::get<TwoPropPlan>(doc.plan))
                                     : multi_json(std::get<MultiHypPlan>(doc.plan));
    j["design"] = body["design"];
    j["stages"] = body["stages"];
    json prov;
    prov["tool"] = doc.provenance.tool;
    prov["version"] = doc.provenance.version;
    prov["tuning"] = doc.provenance.tuning ? tuning_json(*doc.provenance.tuning) : json(nullptr);
    j["provenance"] = prov;
    return j.dump(2) + "\n";
}

PlanDocument read_plan_document(std::string_view text)
{
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // byte offset to line / column
        const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
        const auto nl = text.substr(0, pos).rfind('\n');
        const std::size_t col = nl == std::string_view::npos ? pos + 1 : pos - nl;
        throw InputError("plan document: syntax error at line " + std::to_string(line) + ", column "
                         + std::to_string(col));
    }
    const Node root(j, "");
    const std::int64_t version = root.at("schema_version").integer();
    if (version != kSchemaVersion)
        root.at("schema_version").fail("unsupported schema version " + std::to_string(version));
    const std::string kind = root.at("kind").text();
    PlanDocument doc;
    if (kind == "two-prop")
        doc.plan = read_two_prop(root);
    else if (kind == "one-sided")
        doc.plan = read_multi(root, PlanKind::one_sided);
    else if (kind == "multi")
        doc.plan = read_multi(root, PlanKind::multi);
    else
        root.at("kind").fail("unknown plan kind '" + kind + "'");
    const Node prov = root.at("provenance");
    doc.provenance.tool = prov.at("tool").text();
    doc.provenance.version = prov.at("version").text();
    if (!prov.at("tuning").is_null())
        doc.provenance.tuning = read_tuning(prov.at("tuning"));
    return doc;
}

PlanDocument load_plan_document(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open plan document '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return read_plan_document(ss.str());
}

void save_plan_document(const PlanDocument& doc, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write '" + path + "'");
    out << write_plan_document(doc);
    if (!out)
        throw InputError("write to '" + path + "' failed");
}

namespace {

json rect_json(const Rectangle& r)
{
    return {{"x_lo", r.x_lo}, {"x_hi", r.x_hi}, {"y_lo", r.y_lo}, {"y_hi", r.y_hi}};
}

} // namespace

std::string write_certificates(const std::vector<RiskCertificate>& certs)
{
    json arr = json::array();
    for (const auto& c : certs) {
        json j;
        j["hypothesis"] = c.hypothesis;
        j["verdict"] = verdict_name(c.verdict);
        j["requirement"] = c.requirement;
        j["explored"] = c.explored;
        j["max_upper"] = c.max_upper;
        j["best_lower"] = c.best_lower;
        j["witness"] = rect_json(c.witness);
        json trace = json::array();
        for (const auto& t : c.trace) {
            json e = rect_json(t.rect);
            e["eta"] = t.eta;
            e["lower"] = t.bounds.lower;
            e["upper"] = t.bounds.upper;
            trace.push_back(e);
        }
        j["trace"] = trace;
        arr.push_back(j);
    }
    json root;
    root["schema_version"] = kSchemaVersion;
    root["certificates"] = arr;
    return root.dump(2) + "\n";
}

void write_certificate_csv(std::ostream& os, const std::vector<RiskCertificate>& certs)
{
    os << "hypothesis,x_lo,x_hi,y_lo,y_hi,eta,lower,upper\n";
    for (const auto& c : certs)
        for (const auto& t : c.trace)
            os << c.hypothesis << ',' << format_double(t.rect.x_lo) << ',' << format_double(t.rect.x_hi) << ','
               << format_double(t.rect.y_lo) << ',' << format_double(t.rect.y_hi) << ',' << format_double(t.eta)
               << ',' << format_double(t.bounds.lower) << ',' << format_double(t.bounds.upper) << '\n';
}

} // namespace seqcl
