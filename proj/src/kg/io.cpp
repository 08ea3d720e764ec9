#include "krlab/kg/io.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace krlab::kg {

using ordered_json = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);  // binary: byte-stable across platforms
    require(f.good(), "cannot open for writing: " + p.string());
    return f;
}

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    require(f.good(), "cannot open for reading: " + p.string());
    return f;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

ordered_json parse_json_file(const std::filesystem::path& p) {
    std::ifstream f = open_in(p);
    ordered_json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        fail("invalid JSON in " + p.string() + ": " + e.what());
    }
    return j;
}

constexpr const char* kVarPrefix = "var:";

std::string node_to_string(const KnowledgeGraph& g, const EntityQuery& q, NodeRef n) {
    if (n.is_var()) return kVarPrefix + q.vars[n.idx];
    return g.entity_ids[q.anchors[n.idx]];
}

}  // namespace

std::string fact_to_string(const KnowledgeGraph& g, const Fact& f) {
    return g.entity_ids[f.head] + " " + g.relation_ids[f.rel] + " " + g.entity_ids[f.tail];
}

void save_kg(const std::filesystem::path& dir, const KnowledgeGraph& g) {
    std::filesystem::create_directories(dir);

    ordered_json schema;
    schema["categories"] = g.category_ids;
    std::vector<std::string> fwd_rels;
    for (RIdx r = 0; r < g.num_relations(); ++r)
        if (!g.rel_is_reverse[r]) fwd_rels.push_back(g.relation_ids[r]);
    schema["relations"] = fwd_rels;
    ordered_json triples = ordered_json::array();
    for (const SchemaTriple& t : g.schema)
        if (!g.rel_is_reverse[t.rel])
            triples.push_back({g.category_ids[t.head_cat], g.relation_ids[t.rel],
                               g.category_ids[t.tail_cat]});
    schema["triples"] = triples;
    open_out(dir / "schema.json") << schema.dump(2) << "\n";

    {
        std::ofstream f = open_out(dir / "categories.tsv");
        for (EIdx v = 0; v < g.num_entities(); ++v)
            f << g.entity_ids[v] << '\t' << g.category_ids[g.entity_cat[v]] << '\n';
    }
    {
        std::ofstream f = open_out(dir / "facts.tsv");
        for (const Fact& fa : g.facts)
            if (!g.rel_is_reverse[fa.rel])
                f << g.entity_ids[fa.head] << '\t' << g.relation_ids[fa.rel] << '\t'
                  << g.entity_ids[fa.tail] << '\n';
    }
}

KnowledgeGraph load_kg(const std::filesystem::path& dir) {
    ordered_json schema = parse_json_file(dir / "schema.json");
    GraphBuilder b;
    for (const auto& c : schema.at("categories")) b.add_category(c.get<std::string>());
    for (const auto& r : schema.at("relations")) b.add_relation(r.get<std::string>());
    for (const auto& t : schema.at("triples")) {
        require(t.is_array() && t.size() == 3, "schema triple must be [head, rel, tail]");
        b.add_schema(t[0].get<std::string>(), t[1].get<std::string>(), t[2].get<std::string>());
    }

    {
        std::ifstream f = open_in(dir / "categories.tsv");
        std::string line;
        size_t ln = 0;
        while (std::getline(f, line)) {
            ++ln;
            if (line.empty()) continue;
            auto cols = split_tabs(line);
            require(cols.size() == 2, "categories.tsv line " + std::to_string(ln) +
                                          ": expected 2 tab-separated columns");
            b.add_entity(cols[0], cols[1]);
        }
    }
    {
        std::ifstream f = open_in(dir / "facts.tsv");
        std::string line;
        size_t ln = 0;
        while (std::getline(f, line)) {
            ++ln;
            if (line.empty()) continue;
            auto cols = split_tabs(line);
            require(cols.size() == 3, "facts.tsv line " + std::to_string(ln) +
                                          ": expected 3 tab-separated columns");
            b.add_fact(cols[0], cols[1], cols[2]);
        }
    }
    try {
        return b.build();
    } catch (const Error& e) {
        fail("loading " + dir.string() + ": " + e.what());
    }
}

void save_queries(const std::filesystem::path& file, const KnowledgeGraph& g,
                  const QuerySet& qs) {
    ordered_json arr = ordered_json::array();
    for (const EntityQuery& q : qs.entity) {
        ordered_json j;
        j["id"] = q.id;
        j["kind"] = "entity";
        ordered_json anchors = ordered_json::array();
        for (EIdx a : q.anchors) anchors.push_back(g.entity_ids[a]);
        j["anchors"] = anchors;
        j["vars"] = q.vars;
        ordered_json edges = ordered_json::array();
        for (const QueryEdge& e : q.edges)
            edges.push_back({node_to_string(g, q, e.src), g.relation_ids[e.rel],
                             node_to_string(g, q, e.dst)});
        j["edges"] = edges;
        j["sink"] = q.vars[q.sink];
        ordered_json answers = ordered_json::array();
        for (EIdx a : q.answers) answers.push_back(g.entity_ids[a]);
        j["answers"] = answers;
        j["tag"] = {{"n_path", q.tag.n_path}, {"m_path", q.tag.m_path}};
        j["trigger"] = q.trigger;
        arr.push_back(std::move(j));
    }
    for (const RelationQuery& q : qs.relation) {
        ordered_json j;
        j["id"] = q.id;
        j["kind"] = "relation";
        j["head"] = g.entity_ids[q.head];
        j["tail"] = g.entity_ids[q.tail];
        j["answer"] = g.relation_ids[q.answer];
        arr.push_back(std::move(j));
    }
    open_out(file) << arr.dump(2) << "\n";
}

QuerySet load_queries(const std::filesystem::path& file, const KnowledgeGraph& g) {
    ordered_json arr = parse_json_file(file);
    require(arr.is_array(), "queries file must hold a JSON array");
    QuerySet qs;
    for (const auto& j : arr) {
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "relation") {
            RelationQuery q;
            q.id = j.at("id").get<std::string>();
            q.head = g.entity(j.at("head").get<std::string>());
            q.tail = g.entity(j.at("tail").get<std::string>());
            q.answer = g.relation(j.at("answer").get<std::string>());
            qs.relation.push_back(std::move(q));
            continue;
        }
        require(kind == "entity", "unknown query kind: " + kind);
        EntityQuery q;
        q.id = j.at("id").get<std::string>();
        for (const auto& a : j.at("anchors")) q.anchors.push_back(g.entity(a.get<std::string>()));
        for (const auto& v : j.at("vars")) q.vars.push_back(v.get<std::string>());
        auto node_of = [&](const std::string& s) -> NodeRef {
            if (s.starts_with(kVarPrefix)) {
                std::string name = s.substr(4);
                for (uint32_t i = 0; i < q.vars.size(); ++i)
                    if (q.vars[i] == name) return NodeRef::var(i);
                fail("edge references undeclared variable: " + name);
            }
            EIdx e = g.entity(s);
            for (uint32_t i = 0; i < q.anchors.size(); ++i)
                if (q.anchors[i] == e) return NodeRef::anchor(i);
            fail("edge references undeclared anchor: " + s);
        };
        for (const auto& e : j.at("edges")) {
            require(e.is_array() && e.size() == 3, "edge must be [src, rel, dst]");
            q.edges.push_back({node_of(e[0].get<std::string>()),
                               g.relation(e[1].get<std::string>()),
                               node_of(e[2].get<std::string>())});
        }
        std::string sink_name = j.at("sink").get<std::string>();
        bool found = false;
        for (uint32_t i = 0; i < q.vars.size(); ++i)
            if (q.vars[i] == sink_name) {
                q.sink = i;
                found = true;
            }
        require(found, "sink names an undeclared variable: " + sink_name);
        for (const auto& a : j.at("answers")) q.answers.push_back(g.entity(a.get<std::string>()));
        std::sort(q.answers.begin(), q.answers.end());
        q.tag.n_path = j.at("tag").at("n_path").get<uint32_t>();
        q.tag.m_path = j.at("tag").at("m_path").get<uint32_t>();
        q.trigger = j.at("trigger").get<bool>();
        validate_query(g, q);
        qs.entity.push_back(std::move(q));
    }
    return qs;
}

}  // namespace krlab::kg
