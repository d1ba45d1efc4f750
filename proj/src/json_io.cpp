#include "tileforge/json_io.hpp"

#include <algorithm>

#include <json.hpp>

namespace tileforge {

namespace {

using json = nlohmann::ordered_json;

// ---- helpers -------------------------------------------------------------

json subscript_to_json(const Subscript& s) {
  json c = json::object();
  for (const auto& [it, v] : s.coeffs) c[it] = v;
  return json{{"coeffs", c}, {"constant", s.constant}};
}

Subscript subscript_from_json(const json& j) {
  Subscript s;
  for (const auto& [k, v] : j.at("coeffs").items())
    s.coeffs[k] = v.get<std::int64_t>();
  s.constant = j.at("constant").get<std::int64_t>();
  return s;
}

json subs_to_json(const std::vector<Subscript>& subs) {
  json a = json::array();
  for (const auto& s : subs) a.push_back(subscript_to_json(s));
  return a;
}

std::vector<Subscript> subs_from_json(const json& j) {
  std::vector<Subscript> out;
  for (const auto& e : j) out.push_back(subscript_from_json(e));
  return out;
}

json expr_to_json(const ExprNode& e) {
  json j;
  switch (e.kind) {
    case ExprNode::Num:
      j["kind"] = "num";
      j["text"] = e.text;
      break;
    case ExprNode::Scalar:
      j["kind"] = "scalar";
      j["text"] = e.text;
      break;
    case ExprNode::ArrayRef:
      j["kind"] = "ref";
      j["array"] = e.array;
      j["subscripts"] = subs_to_json(e.subscripts);
      break;
    case ExprNode::Neg:
      j["kind"] = "neg";
      j["operand"] = expr_to_json(*e.lhs);
      break;
    case ExprNode::Binary:
      j["kind"] = "bin";
      j["op"] = std::string(1, e.op);
      j["lhs"] = expr_to_json(*e.lhs);
      j["rhs"] = expr_to_json(*e.rhs);
      break;
  }
  return j;
}

std::shared_ptr<ExprNode> expr_from_json(const json& j) {
  auto e = std::make_shared<ExprNode>();
  std::string k = j.at("kind").get<std::string>();
  if (k == "num" || k == "scalar") {
    e->kind = k == "num" ? ExprNode::Num : ExprNode::Scalar;
    e->text = j.at("text").get<std::string>();
  } else if (k == "ref") {
    e->kind = ExprNode::ArrayRef;
    e->array = j.at("array").get<std::string>();
    e->subscripts = subs_from_json(j.at("subscripts"));
  } else if (k == "neg") {
    e->kind = ExprNode::Neg;
    e->lhs = expr_from_json(j.at("operand"));
  } else if (k == "bin") {
    e->kind = ExprNode::Binary;
    e->op = j.at("op").get<std::string>().at(0);
    e->lhs = expr_from_json(j.at("lhs"));
    e->rhs = expr_from_json(j.at("rhs"));
  } else {
    throw SchemaError("unknown expression kind '" + k + "'");
  }
  return e;
}

json ops_to_json(const std::map<OpKind, std::int64_t>& ops) {
  json j = json::object();
  for (const auto& [op, n] : ops) j[op_kind_name(op)] = n;
  return j;
}

std::map<OpKind, std::int64_t> ops_from_json(const json& j) {
  std::map<OpKind, std::int64_t> out;
  for (const auto& [k, v] : j.items()) {
    auto op = op_kind_from_name(k);
    if (!op) throw SchemaError("unknown op kind '" + k + "'");
    out[*op] = v.get<std::int64_t>();
  }
  return out;
}

json ir_to_json_obj(const KernelIR& ir) {
  json j;
  j["name"] = ir.name;
  json arrays = json::array();
  for (const auto& a : ir.arrays)
    arrays.push_back(
        {{"name", a.name}, {"dims", a.dims}, {"element_bits", a.element_bits}});
  j["arrays"] = arrays;
  j["scalars"] = ir.scalars;
  json loops = json::array();
  for (const auto& l : ir.loops) {
    json lj = {{"id", l.id},
               {"iterator", l.iterator},
               {"trip_count", l.trip_count},
               {"depth", l.depth}};
    lj["parent"] = l.parent ? json(*l.parent) : json(nullptr);
    loops.push_back(lj);
  }
  j["loops"] = loops;
  json stmts = json::array();
  for (const auto& s : ir.statements) {
    json sj;
    sj["id"] = s.id;
    sj["enclosing_loops"] = s.enclosing_loops;
    sj["ops"] = ops_to_json(s.ops);
    json accs = json::array();
    for (const auto& acc : s.accesses)
      accs.push_back({{"array", acc.array},
                      {"subscripts", subs_to_json(acc.subscripts)},
                      {"mode", acc.mode == AccessMode::Write ? "write" : "read"},
                      {"non_simple", acc.non_simple}});
    sj["accesses"] = accs;
    sj["is_accumulation"] = s.is_accumulation;
    sj["accumulation_op"] = op_kind_name(s.accumulation_op);
    sj["assign_op"] = s.assign_op;
    sj["rhs"] = expr_to_json(*s.rhs);
    sj["source_text"] = s.source_text;
    stmts.push_back(sj);
  }
  j["statements"] = stmts;
  return j;
}

KernelIR ir_from_json_obj(const json& j) {
  KernelIR ir;
  ir.name = j.at("name").get<std::string>();
  for (const auto& a : j.at("arrays")) {
    Array arr;
    arr.name = a.at("name").get<std::string>();
    arr.dims = a.at("dims").get<std::vector<std::int64_t>>();
    arr.element_bits = a.at("element_bits").get<int>();
    ir.arrays.push_back(arr);
  }
  ir.scalars = j.at("scalars").get<std::vector<std::string>>();
  for (const auto& l : j.at("loops")) {
    Loop lp;
    lp.id = l.at("id").get<std::string>();
    lp.iterator = l.at("iterator").get<std::string>();
    lp.trip_count = l.at("trip_count").get<std::int64_t>();
    lp.depth = l.at("depth").get<int>();
    if (!l.at("parent").is_null())
      lp.parent = l.at("parent").get<std::string>();
    ir.loops.push_back(lp);
  }
  for (const auto& s : j.at("statements")) {
    Statement st;
    st.id = s.at("id").get<std::string>();
    st.enclosing_loops = s.at("enclosing_loops").get<std::vector<std::string>>();
    st.ops = ops_from_json(s.at("ops"));
    for (const auto& a : s.at("accesses")) {
      AffineAccess acc;
      acc.array = a.at("array").get<std::string>();
      acc.subscripts = subs_from_json(a.at("subscripts"));
      acc.mode = a.at("mode").get<std::string>() == "write" ? AccessMode::Write
                                                            : AccessMode::Read;
      acc.non_simple = a.at("non_simple").get<bool>();
      st.accesses.push_back(acc);
    }
    st.is_accumulation = s.at("is_accumulation").get<bool>();
    auto op = op_kind_from_name(s.at("accumulation_op").get<std::string>());
    if (!op) throw SchemaError("bad accumulation_op");
    st.accumulation_op = *op;
    st.assign_op = s.at("assign_op").get<std::string>();
    st.rhs = expr_from_json(s.at("rhs"));
    st.source_text = s.at("source_text").get<std::string>();
    ir.statements.push_back(st);
  }
  return ir;
}

json deps_to_json_obj(const std::vector<Dependence>& deps) {
  json a = json::array();
  const char* names[] = {"flow", "anti", "output", "input"};
  for (const auto& d : deps) {
    json dj;
    dj["src"] = d.src_stmt;
    dj["dst"] = d.dst_stmt;
    dj["kind"] = names[static_cast<int>(d.kind)];
    dj["array"] = d.array;
    json dist = json::array();
    for (const auto& c : d.distance)
      dist.push_back(c.star ? json("*") : json(c.value));
    dj["distance"] = dist;
    dj["common_loops"] = d.common_loops;
    dj["carried_level"] = d.carried_level;
    a.push_back(dj);
  }
  return a;
}

std::vector<Dependence> deps_from_json_obj(const json& a) {
  std::vector<Dependence> out;
  for (const auto& dj : a) {
    Dependence d;
    d.src_stmt = dj.at("src").get<std::string>();
    d.dst_stmt = dj.at("dst").get<std::string>();
    std::string k = dj.at("kind").get<std::string>();
    d.kind = k == "flow"     ? DepKind::Flow
             : k == "anti"   ? DepKind::Anti
             : k == "output" ? DepKind::Output
                             : DepKind::Input;
    d.array = dj.at("array").get<std::string>();
    for (const auto& c : dj.at("distance"))
      d.distance.push_back(c.is_string() ? Distance::unknown()
                                         : Distance::known(c.get<std::int64_t>()));
    d.common_loops = dj.at("common_loops").get<std::vector<std::string>>();
    d.carried_level = dj.at("carried_level").get<int>();
    out.push_back(d);
  }
  return out;
}

json reductions_to_json_obj(const ReductionInfo& r) {
  json j = json::object();
  for (const auto& [stmt, loops] : r.loops) j[stmt] = loops;
  return j;
}

ReductionInfo reductions_from_json_obj(const json& j) {
  ReductionInfo r;
  for (const auto& [k, v] : j.items())
    r.loops[k] = v.get<std::vector<std::string>>();
  return r;
}

json parse_or_throw(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw SchemaError("malformed JSON");
  return j;
}

}  // namespace

std::string ir_to_json(const KernelIR& ir) {
  return ir_to_json_obj(ir).dump(2) + "\n";
}

KernelIR ir_from_json(const std::string& text) {
  try {
    return ir_from_json_obj(parse_or_throw(text));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("kernel JSON: ") + e.what());
  }
}

std::string deps_to_json(const std::vector<Dependence>& deps,
                         const ReductionInfo& reductions) {
  json j;
  j["dependences"] = deps_to_json_obj(deps);
  j["reduction_loops"] = reductions_to_json_obj(reductions);
  return j.dump(2) + "\n";
}

std::string space_to_json(const DesignSpace& space) {
  json j;
  j["kernel"] = ir_to_json_obj(space.ir);
  j["dependences"] = deps_to_json_obj(space.deps);
  j["reduction_loops"] = reductions_to_json_obj(space.reductions);
  json nests = json::array();
  for (const auto& n : space.nests) {
    json nj;
    nj["stmts"] = n.stmts;
    nj["band"] = n.band;
    nj["singleton"] = n.singleton;
    nj["fully_permutable"] = n.fully_permutable;
    nj["perms"] = n.perms;
    nj["reduction_loops"] = n.reduction_loops;
    json cache = json::array();
    for (const auto& [key, dom] : n.cache)
      cache.push_back({{"stmt", key.first},
                       {"array", key.second},
                       {"before_nest_only", dom.before_nest_only},
                       {"num_slots", dom.num_slots}});
    nj["cache"] = cache;
    nests.push_back(nj);
  }
  j["nests"] = nests;
  json triples = json::object();
  for (const auto& [lid, dom] : space.triples) {
    json a = json::array();
    for (const auto& t : dom) a.push_back({t.t0, t.t1, t.t2});
    triples[lid] = a;
  }
  j["triples"] = triples;
  json burst = json::object();
  for (const auto& [arr, b] : space.burst_bits) burst[arr] = b;
  j["burst_bits"] = burst;
  json res = json::array();
  for (const auto& r : space.residents)
    res.push_back({{"array", r.array},
                   {"producer", r.producer_stmt},
                   {"consumer", r.consumer_stmt}});
  j["residents"] = res;
  return j.dump(2) + "\n";
}

DesignSpace space_from_json(const std::string& text) {
  try {
    json j = parse_or_throw(text);
    DesignSpace sp;
    sp.ir = ir_from_json_obj(j.at("kernel"));
    sp.deps = deps_from_json_obj(j.at("dependences"));
    sp.reductions = reductions_from_json_obj(j.at("reduction_loops"));
    for (const auto& nj : j.at("nests")) {
      NestSpace n;
      n.stmts = nj.at("stmts").get<std::vector<std::string>>();
      n.band = nj.at("band").get<std::vector<std::string>>();
      n.singleton = nj.at("singleton").get<bool>();
      n.fully_permutable = nj.at("fully_permutable").get<bool>();
      n.perms = nj.at("perms").get<std::vector<std::vector<int>>>();
      n.reduction_loops =
          nj.at("reduction_loops").get<std::vector<std::string>>();
      for (const auto& cj : nj.at("cache")) {
        CacheDomain d;
        d.array = cj.at("array").get<std::string>();
        d.before_nest_only = cj.at("before_nest_only").get<bool>();
        d.num_slots = cj.at("num_slots").get<int>();
        n.cache[{cj.at("stmt").get<std::string>(), d.array}] = d;
      }
      sp.nests.push_back(n);
    }
    for (const auto& [lid, a] : j.at("triples").items()) {
      std::vector<FactorTriple> dom;
      for (const auto& t : a)
        dom.push_back({t.at(0).get<std::int64_t>(), t.at(1).get<std::int64_t>(),
                       t.at(2).get<std::int64_t>()});
      sp.triples[lid] = dom;
    }
    for (const auto& [arr, b] : j.at("burst_bits").items())
      sp.burst_bits[arr] = b.get<std::int64_t>();
    for (const auto& rj : j.at("residents"))
      sp.residents.push_back({rj.at("array").get<std::string>(),
                              rj.at("producer").get<std::string>(),
                              rj.at("consumer").get<std::string>()});
    return sp;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("design-space JSON: ") + e.what());
  }
}

std::string solution_to_json(const DesignSpace& space,
                             const SolveOutcome& out) {
  json j;
  j["kernel"] = space.ir.name;
  j["status"] = solve_status_name(out.status);
  j["objective"] = out.breakdown.objective;
  j["nodes_explored"] = out.nodes_explored;
  json loops = json::object();
  for (const auto& [lid, la] : out.best.loops)
    loops[lid] = {{"tc", {la.tc.t0, la.tc.t1, la.tc.t2}},
                  {"pip", la.pip},
                  {"uf", la.uf}};
  j["loops"] = loops;
  json perm = json::array();
  for (size_t ni = 0; ni < out.best.perm.size(); ++ni) {
    json p = json::array();
    for (int b : out.best.perm[ni])
      p.push_back(space.nests[ni].band[static_cast<size_t>(b)]);
    perm.push_back(p);
  }
  j["perm"] = perm;
  json cache = json::array();
  for (const auto& [key, pos] : out.best.cache)
    cache.push_back(
        {{"stmt", key.first}, {"array", key.second}, {"position", pos}});
  j["cache"] = cache;
  json ap = json::object();
  for (const auto& [arr, dims] : out.best.ap) ap[arr] = dims;
  j["partition"] = ap;
  json stmts = json::object();
  for (const auto& [sid, p] : out.breakdown.stmts)
    stmts[sid] = {{"lat2", p.lat2},         {"lat1", p.lat1},
                  {"lat0", p.lat0},         {"lat_mem", p.lat_mem},
                  {"lat_total", p.lat_total}, {"ii", p.ii}};
  j["breakdown"] = {{"objective", out.breakdown.objective}, {"stmts", stmts}};
  return j.dump(2) + "\n";
}

SolutionFile solution_from_json(const std::string& text) {
  try {
    json j = parse_or_throw(text);
    SolutionFile f;
    f.kernel = j.at("kernel").get<std::string>();
    f.status = j.at("status").get<std::string>();
    f.objective = j.at("objective").get<std::int64_t>();
    f.nodes_explored = j.at("nodes_explored").get<std::int64_t>();
    for (const auto& [lid, lj] : j.at("loops").items()) {
      LoopAssign la;
      la.tc = {lj.at("tc").at(0).get<std::int64_t>(),
               lj.at("tc").at(1).get<std::int64_t>(),
               lj.at("tc").at(2).get<std::int64_t>()};
      la.pip = lj.at("pip").get<bool>();
      la.uf = lj.at("uf").get<std::int64_t>();
      f.assignment.loops[lid] = la;
    }
    // permutations arrive as loop-id lists; resolve_perm turns them into
    // band indices once a design space is available
    for (const auto& p : j.at("perm"))
      f.perm_ids.push_back(p.get<std::vector<std::string>>());
    for (const auto& c : j.at("cache"))
      f.assignment.cache[{c.at("stmt").get<std::string>(),
                          c.at("array").get<std::string>()}] =
          c.at("position").get<int>();
    for (const auto& [arr, dims] : j.at("partition").items())
      f.assignment.ap[arr] = dims.get<std::vector<std::int64_t>>();
    return f;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("solution JSON: ") + e.what());
  }
}

void resolve_perm(const DesignSpace& space, SolutionFile& f) {
  if (f.perm_ids.size() != space.nests.size())
    throw SchemaError("solution permutation count does not match the nests");
  f.assignment.perm.clear();
  for (size_t ni = 0; ni < space.nests.size(); ++ni) {
    const auto& band = space.nests[ni].band;
    const auto& ids = f.perm_ids[ni];
    if (ids.size() != band.size())
      throw SchemaError("permutation arity mismatch in nest " +
                        std::to_string(ni));
    std::vector<int> p;
    for (const auto& id : ids) {
      auto it = std::find(band.begin(), band.end(), id);
      if (it == band.end())
        throw SchemaError("permutation names unknown loop " + id);
      p.push_back(static_cast<int>(it - band.begin()));
    }
    f.assignment.perm.push_back(p);
  }
}

}  // namespace tileforge
