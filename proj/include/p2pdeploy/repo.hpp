#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "p2pdeploy/store.hpp"

namespace p2pdeploy {

// p2p://<bundleName>
class P2pUri {
 public:
  static constexpr std::string_view kScheme = "p2p://";

  explicit P2pUri(std::string bundle_name);
  const std::string& bundle_name() const { return bundle_name_; }
  std::string str() const { return std::string(kScheme) + bundle_name_; }

  friend bool operator==(const P2pUri&, const P2pUri&) = default;

 private:
  std::string bundle_name_;
};

// Any URI whose scheme is not p2p; resolving it is someone else's job.
struct Passthrough {
  std::string text;
};

std::variant<P2pUri, Passthrough> parse_uri(std::string_view text);

struct ComponentDescriptor {
  std::string name;
  std::string version = "1.0.0";
  NodeId digest;
  std::uint64_t size = 0;
  std::string start_entry;  // activator, empty when none
  std::vector<std::string> imports;
  std::vector<std::string> exports;
  std::string source_uri;

  friend bool operator==(const ComponentDescriptor&, const ComponentDescriptor&) = default;
};

// Compares dotted numeric versions component-wise; missing components count as 0.
int compare_versions(std::string_view a, std::string_view b);

class RepositoryIndex {
 public:
  std::uint64_t generated_at = 0;

  const std::vector<ComponentDescriptor>& entries() const { return entries_; }
  const ComponentDescriptor* find(std::string_view name) const;
  // Adds or replaces the descriptor with the same name.
  void upsert(ComponentDescriptor d);
  bool empty() const { return entries_.empty(); }

  friend bool operator==(const RepositoryIndex&, const RepositoryIndex&) = default;

 private:
  std::vector<ComponentDescriptor> entries_;
};

// Descriptor file text: a two-line header (generated_at, entries) followed by
// one blank-line separated record per bundle with the fixed key order
// name, version, digest, size, start, imports, exports, uri.
std::string write_index(const RepositoryIndex& index);
RepositoryIndex read_index(std::string_view text);

struct ResolvedBundle {
  std::string name;
  int cycle_group = -1;  // members of one import cycle share a group id
};

// Dependency-closed install order, providers before dependents.
std::vector<ResolvedBundle> resolve(const RepositoryIndex& index, std::string_view name,
                                    const std::set<std::string>& base_exports = {});

enum class Lifecycle { Installed, Active };

std::string_view to_string(Lifecycle s);

// One OSGi-like container bound to an overlay node.
struct GatewayState {
  NodeId node;
  RepositoryIndex index;
  std::set<std::string> base_exports;
  std::map<std::string, Lifecycle> installed;

  explicit GatewayState(NodeId bound) : node(bound) {}

  bool is_installed(std::string_view name) const { return installed.count(std::string(name)) != 0; }
  bool is_active(std::string_view name) const;
};

struct InstallReport {
  std::string requested;
  std::vector<std::string> fetched;
  std::vector<std::string> already_installed;
  int total_hops = 0;
};

// Resolves the URI against the gateway's index and fetches every missing
// bundle through the store, verifying digests.
InstallReport install(GatewayState& gw, SimNetwork& net, std::string_view uri_text);

Lifecycle start(GatewayState& gw, std::string_view name);
Lifecycle stop(GatewayState& gw, std::string_view name);
void uninstall(GatewayState& gw, std::string_view name);

// Indexes the descriptor locally and publishes the payload from the
// gateway's node. Sets source_uri to p2p://<name>.
PublishTrail publish_local(GatewayState& gw, SimNetwork& net, ComponentDescriptor descriptor,
                           const ComponentPayload& payload);

}  // namespace p2pdeploy
