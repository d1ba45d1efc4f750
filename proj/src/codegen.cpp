#include "tileforge/codegen.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace tileforge {

namespace {

const char* ctype(int bits) {
  switch (bits) {
    case 8: return "char";
    case 16: return "short";
    case 64: return "double";
    default: return "float";
  }
}

std::string num(std::int64_t v) { return std::to_string(v); }

// One buffer dimension: full array extent, or the tile extent supplied by a
// level-0 loop that encloses the transfer point.
struct BufDim {
  std::int64_t extent = 1;
  std::int64_t full = 1;
  bool tiled = false;          // extent < full possible only when tiled
  std::string loop_id;         // the band loop indexing this dim (tiled case)
  std::string iterator;
};

// One deduped (nest, array, position) transfer and its on-chip buffer.
struct Group {
  int nest = 0;
  std::string array;
  int position = kBeforeNest;
  std::string owner_stmt;
  bool written = false;
  bool load_elided = false;
  std::vector<BufDim> dims;
  std::int64_t elements = 1;
  std::string buf;           // buffer name; resident consumers alias the
  bool owns_buffer = true;   // producer's buffer and do not redeclare it
};

struct Emitter {
  const DesignSpace& sp;
  const PlatformConfig& cfg;
  const Assignment& a;
  std::vector<Group> groups;
  std::map<std::tuple<int, std::string, int>, size_t> group_idx;
  std::set<std::string> ivars;             // int locals to declare
  std::map<std::string, std::string> env;  // loop id -> level-0 index expr
  std::ostringstream fns;                  // transfer functions
  std::ostringstream body;                 // kernel body
  std::set<std::string> emitted_fns;
  EmittedDesign out;
  int ind = 1;

  std::set<std::string> reserved;  // names generated loop variables must avoid

  Emitter(const DesignSpace& s, const PlatformConfig& c, const Assignment& x)
      : sp(s), cfg(c), a(x) {
    for (const auto& ar : sp.ir.arrays) reserved.insert(ar.name);
    for (const auto& sc : sp.ir.scalars) reserved.insert(sc);
  }

  // level variable for an iterator, e.g. (i, 2) -> "i2"; suffixed with
  // underscores when the natural name collides with an array or scalar
  std::string lv(const std::string& iter, int level) const {
    std::string v = iter + std::to_string(level);
    while (reserved.count(v)) v += "_";
    return v;
  }

  const LoopAssign& la(const std::string& lid) const { return a.loops.at(lid); }
  std::string pad() const { return std::string(2 * static_cast<size_t>(ind), ' '); }
  void line(const std::string& s) { body << pad() << s << "\n"; }
  void pragma(const std::string& s) { body << "#pragma HLS " << s << "\n"; }

  // ---- transfer groups -----------------------------------------------------

  int slot_of(const std::vector<int>& perm, int band_index) const {
    for (size_t k = 0; k < perm.size(); ++k)
      if (perm[k] == band_index) return static_cast<int>(k);
    return -1;
  }

  void build_groups() {
    for (size_t ni = 0; ni < sp.nests.size(); ++ni) {
      const NestSpace& nest = sp.nests[ni];
      const auto& perm = a.perm[ni];
      for (const auto& sid : nest.stmts) {
        const Statement& s = sp.ir.statement(sid);
        for (const auto& [key, dom] : nest.cache) {
          if (key.first != sid) continue;
          int pos = a.cache.at(key);
          auto gk = std::make_tuple(static_cast<int>(ni), key.second, pos);
          auto it = group_idx.find(gk);
          if (it != group_idx.end()) {
            groups[it->second].written |= s.write().array == key.second;
            continue;
          }
          Group g;
          g.nest = static_cast<int>(ni);
          g.array = key.second;
          g.position = pos;
          g.owner_stmt = sid;
          g.written = s.write().array == key.second;
          const Array* arr = sp.ir.find_array(key.second);
          for (size_t d = 0; d < arr->dims.size(); ++d) {
            BufDim bd;
            bd.full = bd.extent = arr->dims[d];
            std::set<std::string> iters;
            for (const auto& sid2 : nest.stmts)
              for (const auto& acc : sp.ir.statement(sid2).accesses)
                if (acc.array == key.second && d < acc.subscripts.size())
                  for (const auto& [itn, c] : acc.subscripts[d].coeffs)
                    iters.insert(itn);
            if (iters.size() == 1) {
              for (size_t b = 0; b < nest.band.size(); ++b) {
                const Loop& l = sp.ir.loop(nest.band[b]);
                if (l.iterator != *iters.begin()) continue;
                int slot = slot_of(perm, static_cast<int>(b));
                if (pos >= 0 && slot >= 0 && slot <= pos) {
                  bd.tiled = true;
                  bd.loop_id = l.id;
                  bd.iterator = l.iterator;
                  bd.extent = l.trip_count / la(l.id).tc.t0;
                }
              }
            }
            g.elements *= bd.extent;
            g.dims.push_back(bd);
          }
          group_idx[gk] = groups.size();
          groups.push_back(std::move(g));
        }
      }
    }
    // resident pairs: the consumer's full-array buffer aliases the
    // producer's, and its load disappears
    for (const auto& r : sp.residents) {
      auto prod = a.cache.find({r.producer_stmt, r.array});
      auto cons = a.cache.find({r.consumer_stmt, r.array});
      if (prod == a.cache.end() || cons == a.cache.end()) continue;
      if (prod->second != kBeforeNest || cons->second != kBeforeNest) continue;
      for (auto& g : groups)
        if (g.array == r.array && g.position == kBeforeNest &&
            g.owner_stmt == r.consumer_stmt)
          g.load_elided = true;
    }
    name_buffers();
  }

  void name_buffers() {
    std::map<std::string, std::vector<size_t>> per_array;
    for (size_t i = 0; i < groups.size(); ++i)
      per_array[groups[i].array].push_back(i);
    for (auto& [arr, idxs] : per_array) {
      // resident consumers alias the first non-elided full-array buffer
      size_t anchor = groups.size();
      for (size_t i : idxs)
        if (groups[i].position == kBeforeNest && !groups[i].load_elided &&
            anchor == groups.size())
          anchor = i;
      std::vector<size_t> owned;
      for (size_t i : idxs) {
        if (groups[i].position == kBeforeNest && groups[i].load_elided &&
            anchor < groups.size() && anchor != i)
          groups[i].owns_buffer = false;
        else
          owned.push_back(i);
      }
      for (size_t i : owned) {
        Group& g = groups[i];
        if (owned.size() == 1) {
          g.buf = arr;
          continue;
        }
        g.buf = arr + "_n" + num(g.nest);
        int same_nest = 0;
        for (size_t j : owned)
          if (groups[j].nest == g.nest) same_nest++;
        if (same_nest > 1) g.buf += "_s" + num(g.position);
      }
      for (size_t i : idxs)
        if (!groups[i].owns_buffer) groups[i].buf = groups[anchor].buf;
    }
  }

  Group& group_for(const std::string& stmt, const std::string& arr) {
    int ni = sp.nest_index_of(stmt);
    int pos = a.cache.at({stmt, arr});
    return groups[group_idx.at({ni, arr, pos})];
  }

  // ---- transfer functions --------------------------------------------------

  std::string dims_suffix(const Group& g, bool full) const {
    std::string s;
    for (const auto& d : g.dims) s += "[" + num(full ? d.full : d.extent) + "]";
    return s;
  }

  // iterator-argument list: one int per tiled dim whose loop is really split
  std::vector<const BufDim*> fn_args(const Group& g) const {
    std::vector<const BufDim*> args;
    for (const auto& d : g.dims)
      if (d.tiled && la(d.loop_id).tc.t0 > 1) args.push_back(&d);
    return args;
  }

  void emit_transfer_fn(const Group& g, bool store) {
    std::string name = (store ? "store_" : "load_") + g.buf;
    if (!emitted_fns.insert(name).second) return;
    out.transfer_fns.push_back(name);
    const Array* arr = sp.ir.find_array(g.array);
    const char* ty = ctype(arr->element_bits);
    std::int64_t burst = sp.burst_bits.at(g.array);
    std::int64_t epb = burst / arr->element_bits;  // elements per burst beat
    std::int64_t beats = (g.elements + epb - 1) / epb;

    fns << "static void " << name << "(" << ty << " buf" << dims_suffix(g, false)
        << ", " << ty << " off" << dims_suffix(g, true);
    for (const auto* d : fn_args(g)) fns << ", int " << d->iterator << "0";
    fns << ") {\n";
    fns << "  int t, e;\n";
    fns << "  for (t = 0; t < " << beats << "; t++) { /* " << burst
        << "-bit bursts */\n";
    fns << "#pragma HLS pipeline\n";
    fns << "    for (e = 0; e < " << epb << "; e++) {\n";
    fns << "#pragma HLS unroll\n";
    fns << "      int n = t * " << epb << " + e;\n";
    std::string guard_pad = "      ";
    bool guard = g.elements % epb != 0;
    if (guard) {
      fns << "      if (n < " << g.elements << ") {\n";
      guard_pad = "        ";
    }
    // linear-index decode per dimension
    std::string bix, oix;
    std::int64_t stride = g.elements;
    for (size_t d = 0; d < g.dims.size(); ++d) {
      stride /= g.dims[d].extent;
      std::string c = "n";
      if (stride > 1) c += " / " + num(stride);
      if (d > 0) c += " % " + num(g.dims[d].extent);
      bix += "[" + c + "]";
      bool offs = g.dims[d].tiled && la(g.dims[d].loop_id).tc.t0 > 1;
      oix += "[" + (offs ? g.dims[d].iterator + "0 * " +
                               num(g.dims[d].extent) + " + " + c
                         : c) +
             "]";
    }
    if (store)
      fns << guard_pad << "off" << oix << " = buf" << bix << ";\n";
    else
      fns << guard_pad << "buf" << bix << " = off" << oix << ";\n";
    if (guard) fns << "      }\n";
    fns << "    }\n  }\n}\n\n";
  }

  std::string call_args(const Group& g) {
    std::string s = g.buf + ", " + g.array + "_off";
    for (const auto* d : fn_args(g)) s += ", " + env.at(d->loop_id);
    return s;
  }

  void emit_point_transfers(int ni, int pos, bool stores) {
    std::vector<std::string> calls;
    for (auto& g : groups) {
      if (g.nest != ni || g.position != pos) continue;
      if (stores) {
        if (!g.written) continue;
        emit_transfer_fn(g, true);
        calls.push_back("store_" + g.buf + "(" + call_args(g) + ");");
      } else if (g.load_elided) {
        line("/* " + g.array + " is already on chip */");
      } else {
        emit_transfer_fn(g, false);
        calls.push_back("load_" + g.buf + "(" + call_args(g) + ");");
      }
    }
    if (calls.size() > 1 && !stores) {
      std::string names;
      for (auto& c : calls) names += (names.empty() ? "" : ", ") +
                                     c.substr(0, c.find('('));
      line("/* grouped transfers: " + names +
           " issued back-to-back (independent DRAM banks) */");
      out.grouped_transfers.push_back("nest " + num(ni) + " pos " + num(pos) +
                                      ": " + names);
    }
    for (auto& c : calls) line(c);
  }

  // ---- kernel body ---------------------------------------------------------

  bool nest_has_pipeline(int ni) const {
    for (const auto& lid : sp.nests[static_cast<size_t>(ni)].band)
      if (la(lid).pip) return true;
    return false;
  }

  std::string joined_stmts(int ni) const {
    std::string s;
    for (const auto& sid : sp.nests[static_cast<size_t>(ni)].stmts)
      s += (s.empty() ? "" : "+") + sid;
    return s;
  }

  void emit_nest(int ni) {
    line("/**** Level 0 of " + joined_stmts(ni) + " ****/");
    emit_point_transfers(ni, kBeforeNest, false);
    emit_slots(ni, 0);
    emit_point_transfers(ni, kBeforeNest, true);
  }

  void emit_slots(int ni, int k) {
    const NestSpace& nest = sp.nests[static_cast<size_t>(ni)];
    if (k == static_cast<int>(nest.band.size())) {
      emit_body(ni);
      return;
    }
    const std::string& lid =
        nest.band[static_cast<size_t>(a.perm[static_cast<size_t>(ni)]
                                          [static_cast<size_t>(k)])];
    const Loop& l = sp.ir.loop(lid);
    const LoopAssign& x = la(lid);
    auto content = [&](const std::string& x0) {
      env[lid] = x0;
      emit_point_transfers(ni, k, false);
      emit_slots(ni, k + 1);
      emit_point_transfers(ni, k, true);
    };
    if (x.tc.t0 == 1) {
      content("0");
      return;
    }
    std::string v = lv(l.iterator, 0);
    ivars.insert(v);
    std::int64_t bound = x.tc.t0 / x.uf;
    line("for (" + v + " = 0; " + v + " < " + num(bound) + "; " + v + "++) {");
    bool red = std::count(nest.reduction_loops.begin(),
                          nest.reduction_loops.end(), lid) > 0;
    if (red && nest_has_pipeline(ni)) pragma("loop_flatten off");
    ind++;
    if (x.uf == 1) {
      content(v);
    } else {
      for (std::int64_t r = 0; r < x.uf; ++r) {
        line("/* coarse replica " + num(r) + " of " + num(x.uf) + " */");
        content("(" + v + " * " + num(x.uf) + " + " + num(r) + ")");
      }
    }
    ind--;
    line("}");
  }

  // index reconstruction for iterator of `lid`, optionally without the
  // level-0 contribution (tile-local form)
  std::string recover_expr(const std::string& lid, bool with_level0) {
    const Loop& l = sp.ir.loop(lid);
    const LoopAssign& x = la(lid);
    std::vector<std::string> terms;
    if (with_level0 && env.count(lid) && env.at(lid) != "0" &&
        x.tc.t0 > 1) {
      std::string t = env.at(lid);
      if (x.tc.t1 * x.tc.t2 > 1) t += " * " + num(x.tc.t1 * x.tc.t2);
      terms.push_back(t);
    }
    if (x.pip && x.tc.t1 > 1) {
      std::string t = lv(l.iterator, 1);
      if (x.tc.t2 > 1) t += " * " + num(x.tc.t2);
      terms.push_back(t);
    }
    if (x.tc.t2 > 1) terms.push_back(lv(l.iterator, 2));
    if (terms.empty()) return "0";
    std::string s;
    for (auto& t : terms) s += (s.empty() ? "" : " + ") + t;
    return s;
  }

  // access rendering with on-chip buffer substitution
  std::string render_access(const std::string& sid, const std::string& arr,
                            const std::vector<Subscript>& subs) {
    Group& g = group_for(sid, arr);
    std::string s = g.buf;
    for (size_t d = 0; d < subs.size(); ++d) {
      const BufDim& bd = g.dims[d];
      if (bd.extent != bd.full) {
        if (!subs[d].is_simple() || subs[d].simple_iterator() != bd.iterator ||
            subs[d].constant != 0)
          throw InternalInvariantError(
              "tiled buffer dimension with incompatible subscript on " + arr);
        s += "[" + recover_expr(bd.loop_id, false) + "]";
      } else {
        s += "[" + render_subscript(subs[d]) + "]";
      }
    }
    return s;
  }

  std::string render_rhs(const Statement& s) {
    return render_expr(*s.rhs, [&](const ExprNode& e) {
      return render_access(s.id, e.array, e.subscripts);
    });
  }

  void emit_recovery(const Statement& s, const std::string& lid) {
    const Loop& l = sp.ir.loop(lid);
    std::string r = l.iterator + " = " + recover_expr(lid, true) + ";";
    ivars.insert(l.iterator);
    line(r);
    out.index_recovery[s.id].push_back(r);
  }

  // Statements of a nest share the band, its factor triples and the pipeline
  // selection, so one level-1/level-2 loop structure hosts all of them in
  // textual order; anything else would reorder fused (non-distributable)
  // statements.
  void emit_body(int ni) {
    const NestSpace& nest = sp.nests[static_cast<size_t>(ni)];
    std::string pip_loop;
    for (const auto& lid : nest.band)
      if (la(lid).pip) pip_loop = lid;
    int opened = 0;

    // level 1: the single pipelined loop carries the pipeline pragma even
    // when its trip count is 1
    if (!pip_loop.empty()) {
      line("/**** Level 1 of " + joined_stmts(ni) + " ****/");
      const Loop& l = sp.ir.loop(pip_loop);
      std::string v = lv(l.iterator, 1);
      ivars.insert(v);
      line("for (" + v + " = 0; " + v + " < " + num(la(pip_loop).tc.t1) +
           "; " + v + "++) {");
      pragma("pipeline");
      ind++;
      opened++;
    }

    std::vector<std::string> l2;  // level-2 loops with trip > 1, band order
    for (const auto& lid : nest.band)
      if (la(lid).tc.t2 > 1) l2.push_back(lid);

    auto open_l2 = [&](const std::string& lid) {
      const Loop& l = sp.ir.loop(lid);
      std::string v = lv(l.iterator, 2);
      ivars.insert(v);
      line("for (" + v + " = 0; " + v + " < " + num(la(lid).tc.t2) + "; " + v +
           "++) {");
      pragma("unroll");
      ind++;
    };

    if (!l2.empty()) line("/**** Level 2 of " + joined_stmts(ni) + " ****/");

    const Statement& first = sp.ir.statement(nest.stmts.front());
    std::vector<std::string> red_loops;
    auto rit = sp.reductions.loops.find(first.id);
    if (rit != sp.reductions.loops.end()) red_loops = rit->second;
    std::int64_t u_red = 1;
    for (const auto& lid : red_loops) u_red *= la(lid).tc.t2;
    bool rewrite = nest.singleton && !pip_loop.empty() &&
                   first.is_accumulation && u_red > 1 && cfg.tree_reduction &&
                   (first.assign_op == "+=" || first.assign_op == "*=");

    if (!rewrite) {
      for (const auto& lid : l2) open_l2(lid);
      for (const auto& lid : nest.band) {
        const Loop& l = sp.ir.loop(lid);
        std::string r = l.iterator + " = " + recover_expr(lid, true) + ";";
        ivars.insert(l.iterator);
        line(r);
        for (const auto& sid : nest.stmts) out.index_recovery[sid].push_back(r);
      }
      for (const auto& sid : nest.stmts) {
        const Statement& s = sp.ir.statement(sid);
        line(render_access(sid, s.write().array, s.write().subscripts) + " " +
             s.assign_op + " " + render_rhs(s) + ";");
      }
      for (size_t i = 0; i < l2.size(); ++i) {
        ind--;
        line("}");
      }
    } else {
      const Statement& s = first;
      const std::string& sid = s.id;
      auto is_red = [&](const std::string& lid) {
        return std::count(red_loops.begin(), red_loops.end(), lid) > 0;
      };
      // reduction accumulator: fill a temp per level-2 reduction point, then
      // combine tree-shaped and write back once per pipeline iteration
      std::vector<std::string> outer, inner;
      for (const auto& lid : l2) (is_red(lid) ? inner : outer).push_back(lid);
      for (const auto& lid : outer) open_l2(lid);
      for (const auto& lid : nest.band)
        if (!is_red(lid)) emit_recovery(s, lid);
      const char* ty =
          ctype(sp.ir.find_array(s.write().array)->element_bits);
      std::string tv = "red_" + sid;
      line(std::string(ty) + " " + tv + "[" + num(u_red) + "];");
      for (const auto& lid : inner) open_l2(lid);
      for (const auto& lid : nest.band)
        if (is_red(lid)) emit_recovery(s, lid);
      std::string idx;  // mixed-radix index over the inner loop variables
      for (const auto& lid : inner) {
        const Loop& l = sp.ir.loop(lid);
        if (idx.empty())
          idx = lv(l.iterator, 2);
        else
          idx = "(" + idx + ") * " + num(la(lid).tc.t2) + " + " +
                lv(l.iterator, 2);
      }
      if (idx.empty()) idx = "0";
      line(tv + "[" + idx + "] = " + render_rhs(s) + ";");
      for (size_t i = 0; i < inner.size(); ++i) {
        ind--;
        line("}");
      }
      std::string op = s.accumulation_op == OpKind::Mul ? " * " : " + ";
      line(std::string(ty) + " acc_" + sid + " = " +
           tree(tv, op, 0, u_red) + ";");
      line(render_access(sid, s.write().array, s.write().subscripts) + " " +
           s.assign_op + " acc_" + sid + ";");
      for (size_t i = 0; i < outer.size(); ++i) {
        ind--;
        line("}");
      }
    }

    for (int i = 0; i < opened; ++i) {
      ind--;
      line("}");
    }
  }

  static std::string tree(const std::string& v, const std::string& op,
                          std::int64_t lo, std::int64_t hi) {
    if (hi - lo == 1) return v + "[" + num(lo) + "]";
    std::int64_t mid = lo + (hi - lo + 1) / 2;
    return "(" + tree(v, op, lo, mid) + op + tree(v, op, mid, hi) + ")";
  }

  // ---- assembly ------------------------------------------------------------

  std::string signature() const {
    std::string s = "void " + sp.ir.name + "(";
    bool first = true;
    for (const auto& arr : sp.ir.arrays) {
      if (!first) s += ", ";
      first = false;
      s += std::string(ctype(arr.element_bits)) + " " + arr.name + "_off";
      for (auto d : arr.dims) s += "[" + num(d) + "]";
    }
    for (const auto& sc : sp.ir.scalars) {
      if (!first) s += ", ";
      first = false;
      s += "float " + sc;
    }
    return s + ")";
  }

  EmittedDesign run() {
    build_groups();
    for (size_t ni = 0; ni < sp.nests.size(); ++ni)
      emit_nest(static_cast<int>(ni));

    std::ostringstream o;
    o << "/* " << sp.ir.name
      << ": transformed HLS design (generated; pragmas are inert in plain C) "
         "*/\n\n";
    o << fns.str();
    o << signature() << " {\n";
    if (!ivars.empty()) {
      o << "  int";
      bool first = true;
      for (const auto& v : ivars) {
        o << (first ? " " : ", ") << v;
        first = false;
      }
      o << ";\n";
    }
    for (const auto& g : groups) {
      if (!g.owns_buffer) continue;
      const Array* arr = sp.ir.find_array(g.array);
      std::string decl = "static " + std::string(ctype(arr->element_bits)) +
                         " " + g.buf + dims_suffix(g, false) + ";";
      o << "  " << decl << "\n";
      std::string pragmas;
      auto ap = a.ap.find(g.array);
      if (ap != a.ap.end())
        for (size_t d = 0; d < ap->second.size(); ++d)
          if (ap->second[d] > 1) {
            std::string p = "#pragma HLS array_partition variable=" + g.buf +
                            " cyclic factor=" + num(ap->second[d]) + " dim=" +
                            num(static_cast<std::int64_t>(d) + 1);
            o << p << "\n";
            pragmas += "\n" + p;
          }
      out.buffer_decls.push_back(decl + pragmas);
    }
    o << body.str();
    o << "}\n";
    out.source_text = o.str();
    return std::move(out);
  }
};

}  // namespace

EmittedDesign emit_design(const DesignSpace& space, const PlatformConfig& cfg,
                          const Assignment& a) {
  auto v = check_all(space, cfg, a);
  if (!v.empty())
    throw InternalInvariantError("refusing to emit an infeasible design: " +
                                 v.front().tag + " " + v.front().message);
  Emitter em(space, cfg, a);
  return em.run();
}

std::string emit_reference_harness(const KernelIR& ir,
                                   const PlatformConfig& cfg) {
  std::ostringstream o;
  o << "/* self-checking harness for " << ir.name
    << ": reference vs. transformed kernel */\n";
  o << "#include <math.h>\n#include <stdio.h>\n#include <string.h>\n\n";

  // prototype of the transformed kernel (other translation unit)
  o << "void " << ir.name << "(";
  bool first = true;
  for (const auto& arr : ir.arrays) {
    if (!first) o << ", ";
    first = false;
    o << ctype(arr.element_bits) << " " << arr.name;
    for (auto d : arr.dims) o << "[" << d << "]";
  }
  for (const auto& sc : ir.scalars) {
    if (!first) o << ", ";
    first = false;
    o << "float " << sc;
  }
  o << ");\n\n";

  KernelIR ref = ir;
  ref.name = ir.name + "_ref";
  o << unparse(ref) << "\n";

  o << "static unsigned lcg;\n";
  // small nonzero integers: products and reduction sums stay exact in
  // float, so any legal reassociation of the sums is bit-identical
  o << "static float frnd(void) {\n";
  o << "  int v;\n";
  o << "  lcg = lcg * 1664525u + 1013904223u;\n";
  o << "  v = (int)((lcg >> 16) % 8u) - 4;\n";
  o << "  return (float)(v < 0 ? v : v + 1);\n";
  o << "}\n";
  bool any_int = false;
  for (const auto& arr : ir.arrays)
    if (arr.element_bits == 8 || arr.element_bits == 16) any_int = true;
  if (any_int) {
    o << "static int irnd(void) {\n";
    o << "  lcg = lcg * 1664525u + 1013904223u;\n";
    o << "  return (int)((lcg >> 16) % 7u);\n";
    o << "}\n";
  }
  o << "\n";

  for (const auto& arr : ir.arrays) {
    std::int64_t n = 1;
    for (auto d : arr.dims) n *= d;
    for (const char* side : {"_r", "_o"}) {
      o << "static " << ctype(arr.element_bits) << " " << arr.name << side;
      for (auto d : arr.dims) o << "[" << d << "]";
      o << ";\n";
    }
    (void)n;
  }

  bool tol = cfg.tree_reduction;
  o << "\nint main(void) {\n";
  o << "  int seed, fail = 0;\n  long n;\n";
  o << "  for (seed = 1; seed <= 10; seed++) {\n";
  o << "    lcg = (unsigned)seed * 2654435761u;\n";
  for (const auto& arr : ir.arrays) {
    std::int64_t n = 1;
    for (auto d : arr.dims) n *= d;
    bool fp = arr.element_bits == 32 || arr.element_bits == 64;
    o << "    { " << ctype(arr.element_bits) << " *p = &" << arr.name << "_r";
    for (size_t d = 0; d < arr.dims.size(); ++d) o << "[0]";
    o << ";\n      for (n = 0; n < " << n << "; n++) p[n] = "
      << (fp ? (std::string("(") + ctype(arr.element_bits) + ")frnd()")
             : (std::string("(") + ctype(arr.element_bits) + ")irnd()"))
      << "; }\n";
    o << "    memcpy(" << arr.name << "_o, " << arr.name << "_r, sizeof("
      << arr.name << "_r));\n";
  }
  for (const auto& sc : ir.scalars)
    o << "    float " << sc << " = frnd();\n";
  auto call = [&](const std::string& fn, const char* side) {
    std::string s = "    " + fn + "(";
    bool f2 = true;
    for (const auto& arr : ir.arrays) {
      if (!f2) s += ", ";
      f2 = false;
      s += arr.name + side;
    }
    for (const auto& sc : ir.scalars) {
      if (!f2) s += ", ";
      f2 = false;
      s += sc;
    }
    return s + ");\n";
  };
  o << call(ir.name + "_ref", "_r");
  o << call(ir.name, "_o");
  for (const auto& arr : ir.arrays) {
    std::int64_t n = 1;
    for (auto d : arr.dims) n *= d;
    bool fp = arr.element_bits == 32 || arr.element_bits == 64;
    o << "    { " << ctype(arr.element_bits) << " *pr = &" << arr.name << "_r";
    for (size_t d = 0; d < arr.dims.size(); ++d) o << "[0]";
    o << ", *po = &" << arr.name << "_o";
    for (size_t d = 0; d < arr.dims.size(); ++d) o << "[0]";
    o << ";\n      for (n = 0; n < " << n << "; n++) {\n";
    if (tol && fp) {
      o << "        double d = fabs((double)pr[n] - (double)po[n]);\n";
      o << "        double m = fabs((double)pr[n]); if (m < 1.0) m = 1.0;\n";
      o << "        if (d > 1e-4 * m) {\n";
    } else {
      o << "        if (pr[n] != po[n]) {\n";
    }
    o << "          printf(\"seed %d: " << arr.name
      << "[%ld] mismatch: %g vs %g\\n\", seed, n, (double)pr[n], "
         "(double)po[n]);\n";
    o << "          fail = 1; break;\n        }\n      } }\n";
  }
  o << "  }\n";
  o << "  printf(fail ? \"FAIL\\n\" : \"PASS\\n\");\n";
  o << "  return fail;\n}\n";
  return o.str();
}

}  // namespace tileforge
