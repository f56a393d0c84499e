#include <algorithm>
#include <set>
#include <sstream>

#include "strandstate/skeleton.hpp"

namespace sst {

namespace {

struct StrandType {
  const Role* role;
  std::size_t height;
  Subst subst;
  Trace trace;
};

std::vector<StrandType> strand_types(const Protocol& p, std::size_t max_height, const std::vector<Term>& alphabet) {
  std::vector<StrandType> out;
  for (const auto& r : p.roles()) {
    if (r.kind != RoleKind::Regular) continue;
    std::vector<std::vector<Term>> choices;
    for (const auto& param : r.params) {
      std::vector<Term> ok;
      for (const auto& a : alphabet) {
        if (r.tag_params.contains(param.name()) && a.kind() != Kind::Tag) continue;
        if (sort_leq(a.sort(), param.sort())) ok.push_back(a);
      }
      choices.push_back(std::move(ok));
    }
    std::vector<std::size_t> pick(choices.size(), 0);
    bool empty = std::any_of(choices.begin(), choices.end(), [](const auto& c) { return c.empty(); });
    while (!empty) {
      Subst s;
      for (std::size_t i = 0; i < pick.size(); ++i) s.set(r.params[i].name(), choices[i][pick[i]]);
      for (std::size_t h = 1; h <= std::min(max_height, r.trace.size()); ++h) {
        Trace t;
        for (std::size_t i = 0; i < h; ++i) t.push_back({r.trace[i].dir, s.apply(r.trace[i].msg)});
        out.push_back({&r, h, s, std::move(t)});
      }
      std::size_t i = 0;
      while (i < pick.size() && ++pick[i] == choices[i].size()) pick[i++] = 0;
      if (i == pick.size()) break;
    }
  }
  return out;
}

std::string bundle_key(const Bundle& b) {
  std::ostringstream os;
  for (std::size_t s = 0; s < b.space.size(); ++s) {
    os << b.roles[s].role << ":";
    for (const auto& e : b.space[s]) os << e.str() << ";";
    os << "|";
  }
  for (const auto& [x, y] : b.comm) os << x.str() << ">" << y.str();
  return os.str();
}

class Enumerator {
 public:
  Enumerator(const Protocol& p, const std::function<void(const Bundle&)>& visit) : p_(p), visit_(visit) {}

  void run(const std::vector<const StrandType*>& chosen) {
    BundleBuilder base(p_, {});
    for (const auto* st : chosen) base.add_strand(st->role->name, st->subst, st->trace);
    std::vector<std::size_t> next(chosen.size(), 0);
    interleave(base, chosen, next);
  }

 private:
  const Protocol& p_;
  const std::function<void(const Bundle&)>& visit_;
  std::set<std::string> seen_;

  void interleave(const BundleBuilder& b, const std::vector<const StrandType*>& chosen, std::vector<std::size_t>& next) {
    bool done = true;
    for (std::size_t s = 0; s < chosen.size(); ++s) {
      if (next[s] == chosen[s]->trace.size()) continue;
      done = false;
      // Strands of the same type advance in order, which removes symmetric
      // interleavings.
      if (s > 0 && chosen[s - 1] == chosen[s] && next[s - 1] <= next[s]) continue;
      Node n{s, next[s]};
      ++next[s];
      if (b.bundle().event(n).is_send()) {
        BundleBuilder c = b;
        c.publish(n);
        interleave(c, chosen, next);
      } else {
        for (std::size_t s2 = 0; s2 < chosen.size(); ++s2) {
          if (s2 == s) continue;
          for (std::size_t i = 0; i < next[s2]; ++i) {
            Node m{s2, i};
            if (!b.bundle().event(m).is_send() || b.bundle().event(m).msg != b.bundle().event(n).msg) continue;
            BundleBuilder c = b;
            c.link(m, n);
            interleave(c, chosen, next);
          }
        }
        BundleBuilder c = b;
        if (c.deliver(n)) interleave(c, chosen, next);
      }
      --next[s];
    }
    if (done && seen_.insert(bundle_key(b.bundle())).second) visit_(b.bundle());
  }
};

}  // namespace

void enumerate_bundles(const Protocol& p, const EnumerationBounds& bounds, const std::vector<Term>& alphabet,
                       const std::function<void(const Bundle&)>& visit) {
  const auto types = strand_types(p, bounds.max_height, alphabet);
  Enumerator e(p, visit);
  std::vector<std::size_t> pick;
  // Nondecreasing type indices enumerate each multiset once.
  std::function<void(std::size_t)> grow = [&](std::size_t from) {
    if (!pick.empty()) {
      std::vector<const StrandType*> chosen;
      for (auto i : pick) chosen.push_back(&types[i]);
      e.run(chosen);
    }
    if (pick.size() == bounds.max_strands) return;
    for (std::size_t i = from; i < types.size(); ++i) {
      pick.push_back(i);
      grow(i);
      pick.pop_back();
    }
  };
  grow(0);
}

}  // namespace sst
