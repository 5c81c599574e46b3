#include "vcache/caching/problem.hpp"

#include <cmath>
#include <limits>

#include "vcache/core/error.hpp"

namespace vcache::caching {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dims(const CachingProblem& p, const Assignment& a) {
  if (a.rows() != p.requester_count() || a.cols() != p.provider_count()) {
    throw InvalidArgument("assignment dimensions do not match the problem");
  }
}

}  // namespace

CachingProblem CachingProblem::build(std::vector<Requester> requesters,
                                     std::vector<Provider> providers, const ChannelParams& chan,
                                     const EconomicParams& econ) {
  CachingProblem out;
  out.requesters_ = std::move(requesters);
  out.providers_ = std::move(providers);
  out.chan_ = chan;
  out.econ_ = econ;
  const std::size_t n_req = out.requesters_.size();
  const std::size_t n_pro = out.providers_.size();
  out.rates_ = Matrix<double>(n_req, n_pro);
  out.latencies_ = Matrix<double>(n_req, n_pro, kInf);
  out.energies_ = Matrix<double>(n_req, n_pro, kInf);
  for (std::size_t i = 0; i < n_req; ++i) {
    const Requester& r = out.requesters_[i];
    for (std::size_t p = 0; p < n_pro; ++p) {
      const double rate = data_rate(distance(r.position, out.providers_[p].position), chan);
      out.rates_(i, p) = rate;
      if (rate > 0.0) {
        out.latencies_(i, p) = tx_latency(r.content, rate);
        out.energies_(i, p) = energy_cost(r.content, rate, chan, econ);
      }
    }
  }
  return out;
}

double CachingProblem::margin(std::size_t i, std::size_t p) const {
  return pair_payment(requesters_[i].content, econ_) - energies_(i, p);
}

FeasibilityReport feasible(const CachingProblem& p, const Assignment& a) {
  check_dims(p, a);
  FeasibilityReport report;
  for (std::size_t q = 0; q < p.provider_count(); ++q) {
    double load = 0.0;
    for (std::size_t i = 0; i < p.requester_count(); ++i) {
      if (a(i, q)) load += p.requesters()[i].content.cache_bytes;
    }
    const double slack = p.providers()[q].capacity_bytes - load;
    if (slack < 0.0) report.violations.push_back({Violation::Kind::capacity, q, slack});
  }
  for (std::size_t i = 0; i < p.requester_count(); ++i) {
    double delay = 0.0;
    for (std::size_t q = 0; q < p.provider_count(); ++q) {
      if (a(i, q)) delay += p.latencies()(i, q);
    }
    const double slack = p.requesters()[i].content.deadline_s - delay;
    if (slack < 0.0) report.violations.push_back({Violation::Kind::latency, i, slack});
  }
  report.feasible = report.violations.empty();
  return report;
}

double utility(const CachingProblem& p, const Assignment& a) {
  check_dims(p, a);
  double total = 0.0;
  for (std::size_t i = 0; i < p.requester_count(); ++i) {
    for (std::size_t q = 0; q < p.provider_count(); ++q) {
      if (a(i, q)) total += p.margin(i, q);
    }
  }
  return total;
}

std::vector<bool> successful_requesters(const CachingProblem& p, const Assignment& a) {
  const auto report = feasible(p, a);
  std::vector<bool> over_capacity(p.provider_count(), false);
  std::vector<bool> late(p.requester_count(), false);
  for (const auto& v : report.violations) {
    (v.kind == Violation::Kind::capacity ? over_capacity : late)[v.index] = true;
  }
  std::vector<bool> ok(p.requester_count(), false);
  for (std::size_t i = 0; i < p.requester_count(); ++i) {
    bool assigned = false;
    bool clean = !late[i];
    for (std::size_t q = 0; q < p.provider_count(); ++q) {
      if (!a(i, q)) continue;
      assigned = true;
      if (over_capacity[q]) clean = false;
    }
    ok[i] = assigned && clean;
  }
  return ok;
}

namespace {

struct ExactSearch {
  const CachingProblem& problem;
  std::size_t n_pro;
  std::size_t cells;
  std::vector<double> margins;
  std::vector<double> optimistic_tail;  // sum of positive margins from cell k on
  std::vector<double> load;
  std::vector<double> delay;
  std::vector<std::uint8_t> current;
  std::vector<std::uint8_t> best;
  double best_value = 0.0;

  void run(std::size_t k, double value) {
    if (k == cells) {
      if (value > best_value) {
        best_value = value;
        best = current;
      }
      return;
    }
    if (value + optimistic_tail[k] <= best_value) return;
    const std::size_t i = k / n_pro;
    const std::size_t q = k % n_pro;
    current[k] = 0;
    run(k + 1, value);
    const auto& req = problem.requesters()[i];
    const double lat = problem.latencies()(i, q);
    const double c = req.content.cache_bytes;
    if (std::isfinite(lat) && load[q] + c <= problem.providers()[q].capacity_bytes &&
        delay[i] + lat <= req.content.deadline_s) {
      current[k] = 1;
      load[q] += c;
      delay[i] += lat;
      run(k + 1, value + margins[k]);
      load[q] -= c;
      delay[i] -= lat;
      current[k] = 0;
    }
  }
};

}  // namespace

ExactSolution solve_exact(const CachingProblem& p) {
  const std::size_t n_req = p.requester_count();
  const std::size_t n_pro = p.provider_count();
  const std::size_t cells = n_req * n_pro;
  if (cells > kExactCellLimit) {
    throw InvalidArgument("instance too large for exact enumeration (I*P = " +
                          std::to_string(cells) + ")");
  }
  ExactSearch search{p, n_pro, cells, {}, {}, {}, {}, {}, {}, 0.0};
  search.margins.resize(cells);
  search.optimistic_tail.assign(cells + 1, 0.0);
  for (std::size_t k = 0; k < cells; ++k) {
    const double m = p.margin(k / n_pro, k % n_pro);
    search.margins[k] = std::isfinite(m) ? m : -kInf;
  }
  for (std::size_t k = cells; k-- > 0;) {
    search.optimistic_tail[k] = search.optimistic_tail[k + 1] + std::max(search.margins[k], 0.0);
  }
  search.load.assign(n_pro, 0.0);
  search.delay.assign(n_req, 0.0);
  search.current.assign(cells, 0);
  search.best.assign(cells, 0);
  search.run(0, 0.0);

  ExactSolution out{p.empty_assignment(), 0.0};
  for (std::size_t k = 0; k < cells; ++k) out.assignment.flat()[k] = search.best[k];
  out.utility = utility(p, out.assignment);
  return out;
}

Assignment gcc(const CachingProblem& p) {
  Assignment a = p.empty_assignment();
  std::vector<double> remaining(p.provider_count());
  for (std::size_t q = 0; q < p.provider_count(); ++q) remaining[q] = p.providers()[q].capacity_bytes;
  for (std::size_t i = 0; i < p.requester_count(); ++i) {
    const Content& c = p.requesters()[i].content;
    std::size_t chosen = p.provider_count();
    double best_rate = 0.0;
    for (std::size_t q = 0; q < p.provider_count(); ++q) {
      if (!p.in_range(i, q)) continue;
      if (c.cache_bytes > remaining[q] || p.latencies()(i, q) > c.deadline_s) continue;
      if (p.rates()(i, q) > best_rate) {
        best_rate = p.rates()(i, q);
        chosen = q;
      }
    }
    if (chosen < p.provider_count()) {
      a(i, chosen) = 1;
      remaining[chosen] -= c.cache_bytes;
    }
  }
  return a;
}

Assignment rcc(const CachingProblem& p, Rng& rng) {
  Assignment a = p.empty_assignment();
  std::vector<std::size_t> reachable;
  for (std::size_t i = 0; i < p.requester_count(); ++i) {
    reachable.clear();
    for (std::size_t q = 0; q < p.provider_count(); ++q) {
      if (p.in_range(i, q)) reachable.push_back(q);
    }
    if (reachable.empty()) continue;
    a(i, reachable[rng.uniform_index(reachable.size())]) = 1;
  }
  return a;
}

nlohmann::json to_json(const CachingProblem& p) {
  using nlohmann::json;
  const auto& ch = p.channel();
  const auto& ec = p.economics();
  json doc;
  doc["channel"] = {{"bandwidth_hz", ch.bandwidth_hz}, {"tx_power_mw", ch.tx_power_mw},
                    {"channel_gain", ch.channel_gain}, {"path_loss_exp", ch.path_loss_exp},
                    {"noise_mw", ch.noise_mw},         {"v2v_range_m", ch.v2v_range_m}};
  doc["economics"] = {{"cache_price", ec.cache_price},
                      {"energy_price", ec.energy_price},
                      {"cache_energy", ec.cache_energy},
                      {"penalty", ec.penalty}};
  doc["requesters"] = json::array();
  for (const auto& r : p.requesters()) {
    doc["requesters"].push_back({{"x", r.position.x},
                                 {"y", r.position.y},
                                 {"heading", std::string(to_string(r.heading))},
                                 {"size_bits", r.content.size_bits},
                                 {"cache_bytes", r.content.cache_bytes},
                                 {"deadline_s", r.content.deadline_s}});
  }
  doc["providers"] = json::array();
  for (const auto& v : p.providers()) {
    doc["providers"].push_back({{"x", v.position.x},
                                {"y", v.position.y},
                                {"heading", std::string(to_string(v.heading))},
                                {"capacity_bytes", v.capacity_bytes}});
  }
  return doc;
}

namespace {

Heading heading_from(const nlohmann::json& node) {
  if (!node.contains("heading")) return Heading::east;
  const auto s = node.at("heading").get<std::string>();
  for (int h = 0; h < kHeadingCount; ++h) {
    if (to_string(static_cast<Heading>(h)) == s) return static_cast<Heading>(h);
  }
  throw ParseError("unknown heading '" + s + "'");
}

}  // namespace

CachingProblem problem_from_json(const nlohmann::json& doc) {
  try {
    ChannelParams ch;
    const auto& jc = doc.at("channel");
    ch.bandwidth_hz = jc.at("bandwidth_hz").get<double>();
    ch.tx_power_mw = jc.at("tx_power_mw").get<double>();
    ch.channel_gain = jc.at("channel_gain").get<double>();
    ch.path_loss_exp = jc.at("path_loss_exp").get<double>();
    ch.noise_mw = jc.at("noise_mw").get<double>();
    ch.v2v_range_m = jc.at("v2v_range_m").get<double>();
    ch.validate();
    EconomicParams ec;
    const auto& je = doc.at("economics");
    ec.cache_price = je.at("cache_price").get<double>();
    ec.energy_price = je.at("energy_price").get<double>();
    ec.cache_energy = je.at("cache_energy").get<double>();
    ec.penalty = je.at("penalty").get<double>();
    ec.validate();
    std::vector<Requester> reqs;
    for (const auto& r : doc.at("requesters")) {
      Requester q;
      q.position = {r.at("x").get<double>(), r.at("y").get<double>()};
      q.heading = heading_from(r);
      q.content = {r.at("size_bits").get<double>(), r.at("cache_bytes").get<double>(),
                   r.at("deadline_s").get<double>()};
      q.content.validate();
      reqs.push_back(q);
    }
    std::vector<Provider> pros;
    for (const auto& v : doc.at("providers")) {
      Provider q;
      q.position = {v.at("x").get<double>(), v.at("y").get<double>()};
      q.heading = heading_from(v);
      q.capacity_bytes = v.at("capacity_bytes").get<double>();
      if (!(q.capacity_bytes > 0.0)) throw InvalidArgument("provider capacity must be positive");
      pros.push_back(q);
    }
    return CachingProblem::build(std::move(reqs), std::move(pros), ch, ec);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance JSON: ") + e.what());
  }
}

nlohmann::json to_json(const Assignment& a) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t q = 0; q < a.cols(); ++q) row.push_back(static_cast<int>(a(i, q)));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace vcache::caching
