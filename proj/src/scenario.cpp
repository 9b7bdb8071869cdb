#include "p2pdeploy/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace p2pdeploy {

namespace {

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool to_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool to_double(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// fn(arg, ...) [op value]
struct Predicate {
  std::string fn;
  std::vector<std::string> args;
  std::string op;  // empty: truthiness
  std::string value;
};

const std::map<std::string, std::size_t>& predicate_arity() {
  static const std::map<std::string, std::size_t> arity = {
      {"installed", 2}, {"active", 2},      {"holds", 2},     {"role", 2},
      {"hops", 1},      {"found", 1},       {"status", 1},    {"served_by", 1},
      {"replica_count", 1}, {"root", 1},    {"root_ok", 1},   {"live_nodes", 0},
      {"last_result", 0},
  };
  return arity;
}

Predicate parse_predicate(const std::string& text) {
  auto fail = [&](const std::string& why) { return Error(ErrorCode::ParseError, "predicate '" + text + "': " + why); };
  auto open = text.find('(');
  auto close = text.find(')');
  if (open == std::string::npos || close == std::string::npos || close < open) throw fail("expected fn(args)");
  Predicate p;
  p.fn = text.substr(0, open);
  p.fn.erase(std::remove_if(p.fn.begin(), p.fn.end(), ::isspace), p.fn.end());
  std::string inner = text.substr(open + 1, close - open - 1);
  std::string arg;
  std::istringstream in(inner);
  while (std::getline(in, arg, ',')) {
    arg.erase(std::remove_if(arg.begin(), arg.end(), ::isspace), arg.end());
    if (arg.empty()) throw fail("empty argument");
    p.args.push_back(arg);
  }
  auto it = predicate_arity().find(p.fn);
  if (it == predicate_arity().end()) throw fail("unknown function '" + p.fn + "'");
  if (it->second != p.args.size()) throw fail(p.fn + " takes " + std::to_string(it->second) + " argument(s)");

  auto rest = tokenize(text.substr(close + 1));
  if (rest.empty()) return p;
  static const std::set<std::string> ops = {"==", "!=", "<", "<=", ">", ">="};
  if (rest.size() != 2 || ops.count(rest[0]) == 0) throw fail("expected '<op> <value>' after the call");
  p.op = rest[0];
  p.value = rest[1];
  return p;
}

struct Rule {
  std::size_t min_args;
  std::size_t max_args;
  std::set<std::string> options;
};

const std::map<std::string, Rule>& rules() {
  static const std::map<std::string, Rule> r = {
      {"config", {0, 0, {"cache_on_lookup", "ttl", "capacity", "timeout", "payload_size", "ids", "latency_min",
                         "latency_max", "maintenance", "retries"}}},
      {"create", {1, 1, {}}},
      {"join", {1, 1, {"via"}}},
      {"leave", {1, 1, {"fail"}}},
      {"publish", {2, 3, {"version", "imports", "exports", "start", "size"}}},
      {"install", {2, 2, {}}},
      {"start", {2, 2, {}}},
      {"stop", {2, 2, {}}},
      {"uninstall", {2, 2, {}}},
      {"lookup", {2, 2, {}}},
      {"remove", {2, 2, {}}},
      {"fail", {1, 1, {}}},
      {"advance", {1, 1, {}}},
      {"stabilize", {0, 0, {}}},
      {"workload", {5, 5, {}}},
      {"dump", {0, 0, {}}},
  };
  return r;
}

std::string role_name(const StoreEntry* e) { return e == nullptr ? "NONE" : std::string(to_string(e->role)); }

}  // namespace

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  Scenario sc;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  std::set<std::string> names;
  std::size_t created = 0;
  bool network_started = false;

  while (std::getline(in, raw)) {
    ++lineno;
    auto fail = [&](const std::string& why) {
      return Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + why);
    };
    std::string line = raw.substr(0, raw.find('#'));
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;

    Command cmd;
    cmd.line = lineno;
    cmd.verb = tokens[0];

    if (cmd.verb == "seed") {
      std::uint64_t s;
      if (tokens.size() != 2 || !to_u64(tokens[1], s)) throw fail("usage: seed <u64>");
      if (network_started) throw fail("seed must precede network commands");
      sc.seed = s;
      continue;
    }
    if (cmd.verb == "assert") {
      auto pos = line.find("assert");
      std::string predicate = line.substr(pos + 6);
      auto first = predicate.find_first_not_of(" \t");
      auto last = predicate.find_last_not_of(" \t\r");
      if (first == std::string::npos) throw fail("assert needs a predicate");
      predicate = predicate.substr(first, last - first + 1);
      try {
        parse_predicate(predicate);
      } catch (const Error& e) {
        throw fail(e.what());
      }
      cmd.args.push_back(predicate);
      sc.commands.push_back(std::move(cmd));
      continue;
    }

    auto rule = rules().find(cmd.verb);
    if (rule == rules().end()) throw fail("unknown command '" + cmd.verb + "'");
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      const std::string& t = tokens[i];
      if (t == "--fail") {
        cmd.options["fail"] = "1";
      } else if (auto eq = t.find('='); eq != std::string::npos && eq > 0) {
        cmd.options[t.substr(0, eq)] = t.substr(eq + 1);
      } else {
        cmd.args.push_back(t);
      }
    }
    for (const auto& [k, v] : cmd.options)
      if (rule->second.options.count(k) == 0) throw fail("unknown option '" + k + "' for " + cmd.verb);
    if (cmd.args.size() < rule->second.min_args || cmd.args.size() > rule->second.max_args)
      throw fail("wrong number of arguments for " + cmd.verb);

    auto need_node = [&](const std::string& n) {
      if (names.count(n) == 0) throw fail("unknown node '" + n + "'");
    };
    auto need_u64 = [&](const std::string& v, const std::string& what) {
      std::uint64_t n;
      if (!to_u64(v, n)) throw fail(what + " must be an unsigned integer, got '" + v + "'");
      return n;
    };

    if (cmd.verb == "config") {
      if (network_started) throw fail("config must precede network commands");
      for (const auto& [k, v] : cmd.options) {
        if (k == "cache_on_lookup") {
          if (v != "on" && v != "off") throw fail("cache_on_lookup is on|off");
        } else if (k == "ids") {
          if (v != "name" && v != "random") throw fail("ids is name|random");
        } else {
          auto n = need_u64(v, k);
          if ((k == "ttl" || k == "maintenance" || k == "timeout" || k == "latency_max") && n == 0)
            throw fail(k + " must be positive");
        }
      }
    } else if (cmd.verb == "create") {
      network_started = true;
      auto n = need_u64(cmd.args[0], "node count");
      if (n == 0) throw fail("create needs at least one node");
      for (std::uint64_t i = 0; i < n; ++i) names.insert("n" + std::to_string(created++));
    } else if (cmd.verb == "join") {
      network_started = true;
      if (names.count(cmd.args[0]) != 0) throw fail("node '" + cmd.args[0] + "' already exists");
      if (cmd.options.count("via")) need_node(cmd.options["via"]);
      names.insert(cmd.args[0]);
    } else if (cmd.verb == "leave" || cmd.verb == "fail") {
      need_node(cmd.args[0]);
    } else if (cmd.verb == "publish") {
      need_node(cmd.args[0]);
      derive_key(cmd.args[1]);
      if (cmd.args[1].find('/') != std::string::npos) throw fail("bundle name contains '/'");
      if (cmd.options.count("size")) need_u64(cmd.options["size"], "size");
      if (cmd.args.size() == 3) {
        auto path = base_dir / cmd.args[2];
        RepositoryIndex index;
        try {
          index = read_index(read_file(path));
        } catch (const Error& e) {
          throw fail("descriptor " + path.string() + ": " + e.what());
        }
        if (index.find(cmd.args[1]) == nullptr) throw fail(path.string() + " has no record for " + cmd.args[1]);
        cmd.args[2] = path.string();
      }
    } else if (cmd.verb == "install") {
      need_node(cmd.args[0]);
    } else if (cmd.verb == "start" || cmd.verb == "stop" || cmd.verb == "uninstall" || cmd.verb == "lookup" ||
               cmd.verb == "remove") {
      need_node(cmd.args[0]);
      if (cmd.args[1].empty()) throw fail("empty bundle name");
    } else if (cmd.verb == "advance") {
      need_u64(cmd.args[0], "ticks");
    } else if (cmd.verb == "workload") {
      network_started = true;
      if (cmd.args[0] != "zipf") throw fail("only 'workload zipf' is supported");
      auto nodes = need_u64(cmd.args[1], "nodes");
      auto bundles = need_u64(cmd.args[2], "bundles");
      need_u64(cmd.args[3], "requests");
      double exponent;
      if (!to_double(cmd.args[4], exponent) || exponent < 0) throw fail("exponent must be a non-negative number");
      if (nodes == 0 || bundles == 0) throw fail("workload needs nodes and bundles");
      while (created < nodes) names.insert("n" + std::to_string(created++));
    }
    sc.commands.push_back(std::move(cmd));
  }
  return sc;
}

ScenarioRunner::ScenarioRunner(std::uint64_t seed, std::filesystem::path base_dir)
    : seed_(seed), base_dir_(std::move(base_dir)) {}

void ScenarioRunner::ensure_network() {
  if (!net_) net_ = std::make_unique<SimNetwork>(seed_, config_.net);
}

SimNetwork& ScenarioRunner::network() {
  ensure_network();
  return *net_;
}

const SimNetwork& ScenarioRunner::network() const {
  if (!net_) throw Error(ErrorCode::NoNodes, "no network created yet");
  return *net_;
}

GatewayState& ScenarioRunner::gateway(std::string_view node_name) {
  NodeId id = node_id(node_name);
  auto it = gateways_.find(std::string(node_name));
  if (it == gateways_.end()) it = gateways_.emplace(std::string(node_name), GatewayState(id)).first;
  return it->second;
}

NodeId ScenarioRunner::node_id(std::string_view node_name) const {
  auto it = names_.find(std::string(node_name));
  if (it == names_.end()) throw Error(ErrorCode::NoSuchNode, "unknown node '" + std::string(node_name) + "'");
  return it->second;
}

std::string ScenarioRunner::node_name(NodeId id) const {
  auto it = ids_.find(id);
  return it == ids_.end() ? id.hex() : it->second;
}

ComponentPayload ScenarioRunner::make_payload(std::string_view bundle, std::size_t size) const {
  Key k = derive_key(bundle);
  std::mt19937_64 gen(seed_ ^ k.high() ^ (k.low() * 0x9e3779b97f4a7c15ULL));
  std::vector<std::uint8_t> bytes(size);
  for (std::size_t i = 0; i < size; i += 8) {
    std::uint64_t word = gen();
    for (std::size_t b = 0; b < 8 && i + b < size; ++b) bytes[i + b] = static_cast<std::uint8_t>(word >> (8 * b));
  }
  return ComponentPayload(std::move(bytes));
}

std::string ScenarioRunner::next_node_name() { return "n" + std::to_string(created_++); }

NodeId ScenarioRunner::add_node(const std::string& name, std::optional<NodeId> via) {
  SimNetwork& net = network();
  NodeId id = config_.random_ids ? NodeId::from_parts(net.rng()(), net.rng()()) : derive_key(name);
  auto live = net.live_ids();
  std::optional<NodeId> bootstrap = via;
  if (!bootstrap && !live.empty()) bootstrap = live[net.uniform(live.size())];
  join(net, name, id, bootstrap);
  names_[name] = id;
  ids_[id] = name;
  return id;
}

void ScenarioRunner::record_command(const Command& cmd, const std::string& result) {
  if (cmd.verb != "assert") last_result_ = result;
  MetricsDocument entry;
  entry["line"] = cmd.line;
  entry["verb"] = cmd.verb;
  entry["time"] = net_ ? net_->now() : 0;
  entry["result"] = result;
  command_log_.push_back(std::move(entry));
}

void ScenarioRunner::do_publish(const Command& cmd) {
  const std::string& bundle = cmd.args[1];
  ComponentDescriptor d;
  d.name = bundle;
  std::size_t size = config_.payload_size;
  NodeId declared_digest;
  if (cmd.args.size() == 3) {
    auto index = read_index(read_file(cmd.args[2]));
    d = *index.find(bundle);
    declared_digest = d.digest;
    size = static_cast<std::size_t>(d.size);
  }
  auto split_list = [](const std::string& v) {
    std::vector<std::string> out;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ','))
      if (!item.empty()) out.push_back(item);
    return out;
  };
  if (auto it = cmd.options.find("version"); it != cmd.options.end()) d.version = it->second;
  if (auto it = cmd.options.find("imports"); it != cmd.options.end()) d.imports = split_list(it->second);
  if (auto it = cmd.options.find("exports"); it != cmd.options.end()) d.exports = split_list(it->second);
  if (auto it = cmd.options.find("start"); it != cmd.options.end()) d.start_entry = it->second;
  if (auto it = cmd.options.find("size"); it != cmd.options.end()) size = std::stoull(it->second);

  ComponentPayload payload = make_payload(bundle, size);
  if (declared_digest != NodeId() && declared_digest != payload.digest())
    throw Error(ErrorCode::IntegrityError, bundle + ": descriptor digest does not match generated payload");
  d.digest = payload.digest();
  d.size = payload.size();

  GatewayState& gw = gateway(cmd.args[0]);
  auto trail = publish_local(gw, network(), d, payload);
  catalog_.upsert(*gw.index.find(bundle));
  catalog_.generated_at = network().now();
  if (std::find(published_.begin(), published_.end(), bundle) == published_.end()) published_.push_back(bundle);
  last_publish_hops_ = static_cast<int>(trail.path.size()) - 1;
}

void ScenarioRunner::do_workload(const Command& cmd) {
  const auto nodes = std::stoull(cmd.args[1]);
  const auto bundles = std::stoull(cmd.args[2]);
  const auto requests = std::stoull(cmd.args[3]);
  const double exponent = std::stod(cmd.args[4]);

  while (created_ < nodes) add_node(next_node_name(), std::nullopt);
  SimNetwork& net = network();
  const auto clients = net.live_ids();
  if (clients.empty()) throw Error(ErrorCode::NoNodes, "workload needs live nodes");

  workload_ = {};
  for (std::uint64_t b = 0; b < bundles; ++b) {
    std::ostringstream name;
    name << "zipf-" << std::setw(4) << std::setfill('0') << b << ".jar";
    const std::string bundle = name.str();
    // Publish from a node other than the key's root so source and root are
    // two distinct replicas.
    const NodeId root = root_of(clients, derive_key(bundle));
    NodeId source = clients[net.uniform(clients.size())];
    while (clients.size() > 1 && source == root) source = clients[net.uniform(clients.size())];

    Command publish_cmd{cmd.line, "publish", {node_name(source), bundle}, {}};
    do_publish(publish_cmd);
    workload_.bundles.push_back(bundle);
  }
  workload_.requests.assign(bundles, 0);

  std::vector<double> cdf(bundles);
  double total = 0;
  for (std::uint64_t r = 0; r < bundles; ++r) {
    total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
    cdf[r] = total;
  }
  for (std::uint64_t i = 0; i < requests; ++i) {
    const double u = net.uniform_real() * total;
    auto rank = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    rank = std::min<std::size_t>(rank, bundles - 1);
    const NodeId client = clients[net.uniform(clients.size())];
    ++workload_.requests[rank];
    if (!net.is_live(client)) {
      ++workload_.failures;
      continue;
    }
    try {
      lookup(net, client, workload_.bundles[rank]);
    } catch (const Error&) {
      ++workload_.failures;
    }
  }
  for (const auto& bundle : workload_.bundles)
    net.metrics().replica_samples.push_back({net.now(), bundle, replica_count(net, bundle)});
}

void ScenarioRunner::execute(const Command& cmd) {
  const std::string& v = cmd.verb;
  if (v == "config") {
    if (net_) throw Error(ErrorCode::InvalidArgument, "config after the network was created");
    for (const auto& [k, val] : cmd.options) {
      if (k == "cache_on_lookup") config_.net.store.cache_on_lookup = val == "on";
      else if (k == "ids") config_.random_ids = val == "random";
      else if (k == "ttl") config_.net.store.ttl = std::stoull(val);
      else if (k == "capacity") config_.net.store.cache_capacity = std::stoull(val);
      else if (k == "timeout") config_.net.timeout = std::stoull(val);
      else if (k == "payload_size") config_.payload_size = std::stoull(val);
      else if (k == "latency_min") config_.net.latency_min = std::stoull(val);
      else if (k == "latency_max") config_.net.latency_max = std::stoull(val);
      else if (k == "maintenance") config_.net.maintenance_interval = std::stoull(val);
      else if (k == "retries") config_.net.retries = static_cast<int>(std::stoull(val));
    }
    record_command(cmd, "ok");
  } else if (v == "create") {
    auto n = std::stoull(cmd.args[0]);
    for (std::uint64_t i = 0; i < n; ++i) add_node(next_node_name(), std::nullopt);
    record_command(cmd, "ok");
  } else if (v == "join") {
    std::optional<NodeId> via;
    if (auto it = cmd.options.find("via"); it != cmd.options.end()) via = node_id(it->second);
    add_node(cmd.args[0], via);
    record_command(cmd, "ok");
  } else if (v == "leave") {
    leave(network(), node_id(cmd.args[0]), cmd.options.count("fail") == 0);
    record_command(cmd, "ok");
  } else if (v == "fail") {
    network().fail(node_id(cmd.args[0]));
    record_command(cmd, "ok");
  } else if (v == "advance") {
    network().advance(std::stoull(cmd.args[0]));
    record_command(cmd, "ok");
  } else if (v == "stabilize") {
    stabilize_all(network());
    record_command(cmd, "ok");
  } else if (v == "dump") {
    dumps_.push_back(dump());
    record_command(cmd, "ok");
  } else if (v == "workload") {
    do_workload(cmd);
    record_command(cmd, "ok");
  } else if (v == "assert") {
    if (!evaluate(cmd.args[0])) throw AssertionFailed(cmd.args[0]);
    record_command(cmd, "ok");
  } else {
    // Protocol operations: failures are outcomes, recorded for later asserts.
    std::string result = "ok";
    try {
      if (v == "publish") {
        do_publish(cmd);
      } else if (v == "install") {
        GatewayState& gw = gateway(cmd.args[0]);
        for (const auto& d : catalog_.entries())
          if (gw.index.find(d.name) == nullptr) gw.index.upsert(d);
        install(gw, network(), cmd.args[1]);
      } else if (v == "start") {
        start(gateway(cmd.args[0]), cmd.args[1]);
      } else if (v == "stop") {
        stop(gateway(cmd.args[0]), cmd.args[1]);
      } else if (v == "uninstall") {
        uninstall(gateway(cmd.args[0]), cmd.args[1]);
      } else if (v == "remove") {
        remove(network(), node_id(cmd.args[0]), cmd.args[1]);
      } else if (v == "lookup") {
        last_lookup_ = LastLookup{};
        try {
          auto r = lookup(network(), node_id(cmd.args[0]), cmd.args[1]);
          *last_lookup_ = {true, "ok", r.hops, node_name(r.served_by)};
        } catch (const Error& e) {
          last_lookup_->status = std::string(to_string(e.code()));
          throw;
        }
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoSuchNode) throw;
      result = std::string(to_string(e.code()));
    }
    record_command(cmd, result);
  }
}

bool ScenarioRunner::evaluate(const std::string& text) const {
  const Predicate p = parse_predicate(text);
  const SimNetwork& net = network();
  auto gw_state = [&](const std::string& node) -> const GatewayState* {
    auto it = gateways_.find(node);
    return it == gateways_.end() ? nullptr : &it->second;
  };
  auto entry = [&](const std::string& node, const std::string& bundle) -> const StoreEntry* {
    const OverlayNode& n = net.node(node_id(node));
    return n.live() ? n.store.find(derive_key(bundle)) : nullptr;
  };
  auto need_lookup = [&]() -> const LastLookup& {
    if (p.args[0] != "lookup") throw Error(ErrorCode::InvalidArgument, p.fn + " expects 'lookup'");
    if (!last_lookup_) throw Error(ErrorCode::InvalidArgument, p.fn + "(lookup) before any lookup");
    return *last_lookup_;
  };

  std::string value;
  bool numeric = true;
  std::int64_t number = 0;
  if (p.fn == "installed") {
    auto gw = gw_state(p.args[0]);
    number = gw != nullptr && gw->is_installed(p.args[1]);
  } else if (p.fn == "active") {
    auto gw = gw_state(p.args[0]);
    number = gw != nullptr && gw->is_active(p.args[1]);
  } else if (p.fn == "holds") {
    number = entry(p.args[0], p.args[1]) != nullptr;
  } else if (p.fn == "role") {
    numeric = false;
    value = role_name(entry(p.args[0], p.args[1]));
  } else if (p.fn == "hops") {
    if (p.args[0] == "publish") {
      number = last_publish_hops_;
    } else {
      number = need_lookup().hops;
    }
  } else if (p.fn == "found") {
    number = need_lookup().ok;
  } else if (p.fn == "status") {
    numeric = false;
    value = need_lookup().status;
  } else if (p.fn == "served_by") {
    numeric = false;
    value = need_lookup().served_by;
  } else if (p.fn == "replica_count") {
    number = static_cast<std::int64_t>(replica_count(net, p.args[0]));
  } else if (p.fn == "root") {
    numeric = false;
    value = node_name(root_of(net, derive_key(p.args[0])));
  } else if (p.fn == "root_ok") {
    const Key k = derive_key(p.args[0]);
    auto holders = root_holders(net, k);
    number = holders.size() == 1 && holders.front() == root_of(net, k);
  } else if (p.fn == "live_nodes") {
    number = static_cast<std::int64_t>(net.live_ids().size());
  } else if (p.fn == "last_result") {
    numeric = false;
    value = last_result_;
  }

  if (p.op.empty()) return numeric ? number != 0 : !value.empty() && value != "NONE";
  if (numeric) {
    std::int64_t rhs;
    auto [ptr, ec] = std::from_chars(p.value.data(), p.value.data() + p.value.size(), rhs);
    if (ec != std::errc() || ptr != p.value.data() + p.value.size())
      throw Error(ErrorCode::InvalidArgument, p.fn + " yields a number; cannot compare with '" + p.value + "'");
    if (p.op == "==") return number == rhs;
    if (p.op == "!=") return number != rhs;
    if (p.op == "<") return number < rhs;
    if (p.op == "<=") return number <= rhs;
    if (p.op == ">") return number > rhs;
    return number >= rhs;
  }
  if (p.op == "==") return value == p.value;
  if (p.op == "!=") return value != p.value;
  throw Error(ErrorCode::InvalidArgument, p.fn + " yields a word; only == and != apply");
}

MetricsDocument ScenarioRunner::dump() const {
  MetricsDocument doc;
  doc["time"] = net_ ? net_->now() : 0;
  MetricsDocument nodes = MetricsDocument::array();
  if (net_) {
    for (const auto& [id, node] : net_->nodes()) {
      if (!node.live()) continue;
      MetricsDocument n;
      n["name"] = node.name;
      n["id"] = id.hex();
      MetricsDocument entries = MetricsDocument::array();
      for (const auto& [k, e] : node.store.entries()) {
        MetricsDocument je;
        je["role"] = std::string(to_string(e.role));
        je["key"] = k.hex();
        je["name"] = e.name;
        je["hits"] = e.hits;
        je["last_access"] = e.last_access;
        entries.push_back(std::move(je));
      }
      n["entries"] = std::move(entries);
      nodes.push_back(std::move(n));
    }
  }
  doc["nodes"] = std::move(nodes);
  return doc;
}

MetricsDocument ScenarioRunner::metrics() const {
  MetricsDocument doc;
  doc["seed"] = seed_;
  doc["clock"] = net_ ? net_->now() : 0;

  MetricsDocument cfg;
  cfg["latency_min"] = config_.net.latency_min;
  cfg["latency_max"] = config_.net.latency_max;
  cfg["timeout"] = config_.net.timeout;
  cfg["retries"] = config_.net.retries;
  cfg["maintenance_interval"] = config_.net.maintenance_interval;
  cfg["cache_capacity"] = config_.net.store.cache_capacity;
  cfg["ttl"] = config_.net.store.ttl;
  cfg["cache_on_lookup"] = config_.net.store.cache_on_lookup;
  cfg["payload_size"] = config_.payload_size;
  cfg["ids"] = config_.random_ids ? "random" : "name";
  doc["config"] = std::move(cfg);

  std::size_t live = 0, departed = 0, failed = 0;
  if (net_) {
    for (const auto& [id, n] : net_->nodes()) {
      live += n.status == NodeStatus::Live;
      departed += n.status == NodeStatus::Departed;
      failed += n.status == NodeStatus::Failed;
    }
  }
  doc["nodes"] = {{"live", live}, {"departed", departed}, {"failed", failed}};

  MetricsDocument messages = MetricsDocument::object();
  MetricsDocument counters = MetricsDocument::object();
  MetricsDocument hops = MetricsDocument::object();
  MetricsDocument samples = MetricsDocument::array();
  if (net_) {
    const Metrics& m = net_->metrics();
    for (std::size_t k = 0; k < kMessageKinds; ++k) {
      messages[std::string(to_string(static_cast<MessageKind>(k)))] = {
          {"sent", m.sent[k]}, {"delivered", m.delivered[k]}, {"timeouts", m.timeouts[k]}};
    }
    for (const auto& [name, value] : m.counters) counters[name] = value;
    for (const auto& [op, histogram] : m.hops) {
      std::uint64_t count = 0, sum = 0;
      int max = 0;
      MetricsDocument h = MetricsDocument::object();
      for (const auto& [hop, n] : histogram) {
        count += n;
        sum += static_cast<std::uint64_t>(hop) * n;
        max = std::max(max, hop);
        h[std::to_string(hop)] = n;
      }
      hops[op] = {{"count", count}, {"mean", count ? static_cast<double>(sum) / static_cast<double>(count) : 0.0},
                  {"max", max}, {"histogram", std::move(h)}};
    }
    for (const auto& s : m.replica_samples) samples.push_back({{"time", s.time}, {"name", s.name}, {"replicas", s.replicas}});
  }
  doc["messages"] = std::move(messages);
  doc["counters"] = std::move(counters);
  doc["hops"] = std::move(hops);

  MetricsDocument load = MetricsDocument::array();
  if (net_) {
    for (const auto& [id, node] : net_->nodes()) {
      if (!node.live()) continue;
      MetricsDocument roles = MetricsDocument::object();
      for (Role r : {Role::Source, Role::Root, Role::Trail, Role::Cache, Role::Retained}) roles[std::string(to_string(r))] = 0;
      for (const auto& [k, e] : node.store.entries())
        roles[std::string(to_string(e.role))] = roles[std::string(to_string(e.role))].get<std::uint64_t>() + 1;
      load.push_back({{"name", node.name},
                      {"id", id.hex()},
                      {"entries", node.store.entries().size()},
                      {"bytes", node.store.stored_bytes()},
                      {"roles", std::move(roles)}});
    }
  }
  doc["load"] = std::move(load);

  MetricsDocument replicas = MetricsDocument::object();
  if (net_)
    for (const auto& bundle : published_) replicas[bundle] = replica_count(*net_, bundle);
  doc["replicas"] = std::move(replicas);
  doc["replica_samples"] = std::move(samples);

  MetricsDocument wl = MetricsDocument::object();
  for (std::size_t i = 0; i < workload_.bundles.size(); ++i) wl[workload_.bundles[i]] = workload_.requests[i];
  doc["workload_requests"] = std::move(wl);
  doc["commands"] = command_log_;
  doc["dumps"] = dumps_;
  return doc;
}

RunOutcome run_scenario(const Scenario& scenario, std::uint64_t seed, const std::filesystem::path& base_dir) {
  RunOutcome out;
  ScenarioRunner runner(seed, base_dir);
  for (std::size_t i = 0; i < scenario.commands.size(); ++i) {
    const Command& cmd = scenario.commands[i];
    const std::string where = "command " + std::to_string(i + 1) + " (line " + std::to_string(cmd.line) + ")";
    try {
      runner.execute(cmd);
    } catch (const AssertionFailed& e) {
      out.exit = ExitCode::AssertionFailed;
      out.diagnostic = where + ": assertion failed: " + e.what();
      break;
    } catch (const std::exception& e) {
      out.exit = ExitCode::RuntimeError;
      out.diagnostic = where + " " + cmd.verb + ": " + e.what();
      break;
    }
  }
  out.metrics = runner.metrics();
  return out;
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << v;
  return s.str();
}

}  // namespace

std::string summarize(const MetricsDocument& doc) {
  try {
    std::ostringstream out;
    out << "seed " << doc.at("seed").get<std::uint64_t>() << ", clock " << doc.at("clock").get<std::uint64_t>()
        << " ticks\n";
    const auto& nodes = doc.at("nodes");
    out << "nodes: live " << nodes.at("live").get<std::uint64_t>() << ", departed "
        << nodes.at("departed").get<std::uint64_t>() << ", failed " << nodes.at("failed").get<std::uint64_t>() << "\n";

    std::uint64_t sent = 0, timeouts = 0;
    for (const auto& [kind, m] : doc.at("messages").items()) {
      sent += m.at("sent").get<std::uint64_t>();
      timeouts += m.at("timeouts").get<std::uint64_t>();
    }
    out << "messages: sent " << sent << ", timeouts " << timeouts << "\n";

    out << "hops:\n";
    for (const std::string op : {"lookup", "publish", "join"}) {
      std::vector<std::pair<int, std::uint64_t>> hist;
      std::uint64_t count = 0;
      if (doc.at("hops").contains(op)) {
        for (const auto& [hop, n] : doc.at("hops").at(op).at("histogram").items()) {
          hist.emplace_back(std::stoi(hop), n.get<std::uint64_t>());
          count += n.get<std::uint64_t>();
        }
      }
      std::sort(hist.begin(), hist.end());
      auto percentile = [&](double q) {
        if (count == 0) return 0;
        auto target = static_cast<std::uint64_t>(std::ceil(q * static_cast<double>(count)));
        std::uint64_t seen = 0;
        for (auto [hop, n] : hist) {
          seen += n;
          if (seen >= std::max<std::uint64_t>(target, 1)) return hop;
        }
        return hist.back().first;
      };
      double sum = 0;
      for (auto [hop, n] : hist) sum += static_cast<double>(hop) * static_cast<double>(n);
      out << "  " << std::left << std::setw(8) << op << " count " << count << " mean "
          << fmt_double(count ? sum / static_cast<double>(count) : 0.0) << " p50 " << percentile(0.5) << " p90 "
          << percentile(0.9) << " p99 " << percentile(0.99) << " max " << (hist.empty() ? 0 : hist.back().first) << "\n";
    }

    out << "load (entries, bytes):\n";
    for (const auto& n : doc.at("load")) {
      out << "  " << n.at("name").get<std::string>() << " " << n.at("id").get<std::string>() << " "
          << n.at("entries").get<std::uint64_t>() << " " << n.at("bytes").get<std::uint64_t>() << "\n";
    }
    out << "replicas:\n";
    for (const auto& [bundle, count] : doc.at("replicas").items())
      out << "  " << bundle << " " << count.get<std::uint64_t>() << "\n";
    return out.str();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed metrics document: ") + e.what());
  }
}

}  // namespace p2pdeploy
