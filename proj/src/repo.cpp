#include "p2pdeploy/repo.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

namespace p2pdeploy {

namespace {

void check_bundle_name(std::string_view name) {
  if (name.empty()) throw Error(ErrorCode::MalformedUri, "empty bundle name");
  if (name.find('/') != std::string_view::npos)
    throw Error(ErrorCode::MalformedUri, "bundle name '" + std::string(name) + "' contains '/'");
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = text.find(sep, pos);
    out.push_back(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool valid_version(std::string_view v) {
  for (auto part : split(v, '.')) {
    std::uint64_t n;
    if (!parse_u64(part, n)) return false;
  }
  return true;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i != 0) out += ',';
    out += items[i];
  }
  return out;
}

}  // namespace

P2pUri::P2pUri(std::string bundle_name) : bundle_name_(std::move(bundle_name)) { check_bundle_name(bundle_name_); }

std::variant<P2pUri, Passthrough> parse_uri(std::string_view text) {
  if (!text.starts_with(P2pUri::kScheme)) return Passthrough{std::string(text)};
  return P2pUri(std::string(text.substr(P2pUri::kScheme.size())));
}

int compare_versions(std::string_view a, std::string_view b) {
  auto pa = split(a, '.');
  auto pb = split(b, '.');
  for (std::size_t i = 0; i < std::max(pa.size(), pb.size()); ++i) {
    std::uint64_t x = 0, y = 0;
    if (i < pa.size()) parse_u64(pa[i], x);
    if (i < pb.size()) parse_u64(pb[i], y);
    if (x != y) return x < y ? -1 : 1;
  }
  return 0;
}

const ComponentDescriptor* RepositoryIndex::find(std::string_view name) const {
  for (const auto& d : entries_)
    if (d.name == name) return &d;
  return nullptr;
}

void RepositoryIndex::upsert(ComponentDescriptor d) {
  for (auto& existing : entries_) {
    if (existing.name == d.name) {
      existing = std::move(d);
      return;
    }
  }
  entries_.push_back(std::move(d));
}

std::string write_index(const RepositoryIndex& index) {
  std::ostringstream out;
  auto field = [&](std::string_view key, const std::string& value) {
    out << key << ':';
    if (!value.empty()) out << ' ' << value;
    out << '\n';
  };
  field("generated_at", std::to_string(index.generated_at));
  field("entries", std::to_string(index.entries().size()));
  for (const auto& d : index.entries()) {
    out << '\n';
    field("name", d.name);
    field("version", d.version);
    field("digest", d.digest.hex());
    field("size", std::to_string(d.size));
    field("start", d.start_entry);
    field("imports", join(d.imports));
    field("exports", join(d.exports));
    field("uri", d.source_uri);
  }
  return out.str();
}

RepositoryIndex read_index(std::string_view text) {
  std::vector<std::string_view> lines;
  {
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos)
        throw Error(ErrorCode::ParseError, "line " + std::to_string(lines.size() + 1) + ": unterminated line");
      lines.push_back(text.substr(pos, nl - pos));
      pos = nl + 1;
    }
  }

  std::size_t at = 0;
  auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorCode::ParseError, "line " + std::to_string(at + 1) + ": " + why);
  };
  auto expect = [&](std::string_view key) -> std::string {
    if (at >= lines.size()) throw fail("missing field '" + std::string(key) + "' (file truncated)");
    std::string_view line = lines[at];
    auto colon = line.find(':');
    if (colon == std::string_view::npos) throw fail("expected 'key: value'");
    std::string_view got = line.substr(0, colon);
    if (got != key) throw fail("expected field '" + std::string(key) + "', found '" + std::string(got) + "'");
    std::string_view value = line.substr(colon + 1);
    if (!value.empty()) {
      if (value.front() != ' ' || value.size() == 1) throw fail("malformed value for '" + std::string(key) + "'");
      value.remove_prefix(1);
    }
    ++at;
    return std::string(value);
  };
  auto expect_u64 = [&](std::string_view key) {
    std::string v = expect(key);
    std::uint64_t n;
    if (!parse_u64(v, n)) {
      --at;
      throw fail("field '" + std::string(key) + "' is not an unsigned integer");
    }
    return n;
  };
  auto list = [&](const std::string& v) {
    std::vector<std::string> out;
    if (v.empty()) return out;
    for (auto item : split(v, ',')) {
      if (item.empty() || item.find(' ') != std::string_view::npos) {
        --at;
        throw fail("malformed package list '" + v + "'");
      }
      out.emplace_back(item);
    }
    return out;
  };

  RepositoryIndex index;
  index.generated_at = expect_u64("generated_at");
  const std::uint64_t count = expect_u64("entries");
  for (std::uint64_t i = 0; i < count; ++i) {
    if (at >= lines.size()) throw fail("expected " + std::to_string(count) + " records, found " + std::to_string(i));
    if (!lines[at].empty()) throw fail("expected blank line between records");
    ++at;
    ComponentDescriptor d;
    d.name = expect("name");
    if (d.name.empty()) {
      --at;
      throw fail("empty bundle name");
    }
    d.version = expect("version");
    if (!valid_version(d.version)) {
      --at;
      throw fail("version '" + d.version + "' is not dotted numeric");
    }
    std::string digest = expect("digest");
    try {
      d.digest = NodeId::from_hex(digest);
    } catch (const Error&) {
      --at;
      throw fail("digest must be 32 lowercase hex digits");
    }
    d.size = expect_u64("size");
    d.start_entry = expect("start");
    d.imports = list(expect("imports"));
    d.exports = list(expect("exports"));
    d.source_uri = expect("uri");
    if (index.find(d.name) != nullptr) {
      at -= 8;
      throw fail("duplicate bundle name '" + d.name + "'");
    }
    index.upsert(std::move(d));
  }
  if (at != lines.size()) throw fail("unexpected content after " + std::to_string(count) + " records");
  return index;
}

std::vector<ResolvedBundle> resolve(const RepositoryIndex& index, std::string_view name,
                                    const std::set<std::string>& base_exports) {
  if (index.find(name) == nullptr) throw Error(ErrorCode::UnknownBundle, "no bundle named '" + std::string(name) + "'");

  auto provider_of = [&](const std::string& pkg) -> const ComponentDescriptor* {
    const ComponentDescriptor* best = nullptr;
    for (const auto& d : index.entries()) {
      if (std::find(d.exports.begin(), d.exports.end(), pkg) == d.exports.end()) continue;
      if (best == nullptr) {
        best = &d;
        continue;
      }
      int cmp = compare_versions(d.version, best->version);
      if (cmp > 0 || (cmp == 0 && d.name < best->name)) best = &d;
    }
    return best;
  };

  auto providers = [&](const ComponentDescriptor& d) {
    std::set<std::string> out;
    for (const auto& pkg : d.imports) {
      if (base_exports.count(pkg) != 0) continue;
      const ComponentDescriptor* p = provider_of(pkg);
      if (p == nullptr)
        throw Error(ErrorCode::Unresolvable, "bundle '" + d.name + "' imports package '" + pkg + "' which nothing exports");
      if (p->name != d.name) out.insert(p->name);
    }
    return out;
  };

  // Tarjan's algorithm over bundle -> provider edges. Components complete in
  // reverse topological order, which is exactly providers first.
  std::map<std::string, int> order, low;
  std::vector<std::string> stack;
  std::set<std::string> on_stack;
  std::vector<ResolvedBundle> result;
  int counter = 0;
  int groups = 0;

  std::function<void(const std::string&)> visit = [&](const std::string& v) {
    order[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    for (const auto& w : providers(*index.find(v))) {
      if (order.count(w) == 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack.count(w) != 0) {
        low[v] = std::min(low[v], order[w]);
      }
    }
    if (low[v] != order[v]) return;
    std::vector<std::string> component;
    while (true) {
      std::string w = stack.back();
      stack.pop_back();
      on_stack.erase(w);
      component.push_back(w);
      if (w == v) break;
    }
    std::sort(component.begin(), component.end());
    int group = component.size() > 1 ? groups++ : -1;
    for (auto& member : component) result.push_back({std::move(member), group});
  };
  visit(std::string(name));
  return result;
}

std::string_view to_string(Lifecycle s) { return s == Lifecycle::Active ? "ACTIVE" : "INSTALLED"; }

bool GatewayState::is_active(std::string_view name) const {
  auto it = installed.find(std::string(name));
  return it != installed.end() && it->second == Lifecycle::Active;
}

InstallReport install(GatewayState& gw, SimNetwork& net, std::string_view uri_text) {
  auto parsed = parse_uri(uri_text);
  if (std::holds_alternative<Passthrough>(parsed))
    throw Error(ErrorCode::InvalidArgument, "'" + std::string(uri_text) + "' is not a p2p:// URI");
  const std::string name = std::get<P2pUri>(parsed).bundle_name();

  InstallReport report;
  report.requested = name;
  for (const auto& step : resolve(gw.index, name, gw.base_exports)) {
    if (gw.is_installed(step.name)) {
      report.already_installed.push_back(step.name);
      continue;
    }
    const ComponentDescriptor& d = *gw.index.find(step.name);
    LookupResult fetched;
    try {
      fetched = lookup(net, gw.node, step.name);
    } catch (const Error& e) {
      throw Error(e.code(), "install of " + name + " aborted at dependency " + step.name + ": " + e.what());
    }
    if (fetched.payload.digest() != d.digest)
      throw Error(ErrorCode::IntegrityError, step.name + ": fetched digest " + fetched.payload.digest().hex() +
                                                 " does not match descriptor " + d.digest.hex());
    gw.installed[step.name] = Lifecycle::Installed;
    report.fetched.push_back(step.name);
    report.total_hops += fetched.hops;
  }
  return report;
}

namespace {

bool exported_by_installed(const GatewayState& gw, const std::string& pkg, std::string_view excluding) {
  if (gw.base_exports.count(pkg) != 0) return true;
  for (const auto& [other, state] : gw.installed) {
    if (other == excluding) continue;
    const ComponentDescriptor* d = gw.index.find(other);
    if (d != nullptr && std::find(d->exports.begin(), d->exports.end(), pkg) != d->exports.end()) return true;
  }
  return false;
}

Lifecycle current(const GatewayState& gw, std::string_view name) {
  auto it = gw.installed.find(std::string(name));
  if (it == gw.installed.end()) throw Error(ErrorCode::LifecycleError, std::string(name) + " is not installed");
  return it->second;
}

}  // namespace

Lifecycle start(GatewayState& gw, std::string_view name) {
  if (current(gw, name) == Lifecycle::Active) throw Error(ErrorCode::LifecycleError, std::string(name) + " is already ACTIVE");
  if (const ComponentDescriptor* d = gw.index.find(name)) {
    for (const auto& pkg : d->imports)
      if (!exported_by_installed(gw, pkg, {}))
        throw Error(ErrorCode::LifecycleError, std::string(name) + " is INSTALLED but no installed bundle exports " + pkg);
  }
  return gw.installed[std::string(name)] = Lifecycle::Active;
}

Lifecycle stop(GatewayState& gw, std::string_view name) {
  if (current(gw, name) != Lifecycle::Active) throw Error(ErrorCode::LifecycleError, std::string(name) + " is INSTALLED, not ACTIVE");
  return gw.installed[std::string(name)] = Lifecycle::Installed;
}

void uninstall(GatewayState& gw, std::string_view name) {
  if (current(gw, name) == Lifecycle::Active)
    throw Error(ErrorCode::LifecycleError, std::string(name) + " is ACTIVE; stop it first");
  for (const auto& [other, state] : gw.installed) {
    if (state != Lifecycle::Active) continue;
    const ComponentDescriptor* d = gw.index.find(other);
    if (d == nullptr) continue;
    for (const auto& pkg : d->imports)
      if (!exported_by_installed(gw, pkg, name))
        throw Error(ErrorCode::LifecycleError,
                    std::string(name) + " is INSTALLED and is the only provider of " + pkg + " for ACTIVE " + other);
  }
  gw.installed.erase(std::string(name));
}

PublishTrail publish_local(GatewayState& gw, SimNetwork& net, ComponentDescriptor descriptor,
                           const ComponentPayload& payload) {
  if (!payload.consistent() || descriptor.digest != payload.digest() || descriptor.size != payload.size())
    throw Error(ErrorCode::IntegrityError, descriptor.name + ": descriptor does not describe the payload");
  descriptor.source_uri = P2pUri(descriptor.name).str();

  RepositoryIndex before = gw.index;
  gw.index.upsert(descriptor);
  gw.index.generated_at = net.now();
  try {
    return publish(net, gw.node, descriptor.name, payload);
  } catch (...) {
    gw.index = std::move(before);
    throw;
  }
}

}  // namespace p2pdeploy
