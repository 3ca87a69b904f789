#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agora/bytes.hpp"
#include "agora/clock.hpp"
#include "agora/crypto.hpp"

namespace agora {

// Overlay identity; deliberately unrelated to any chain account.
struct P2pAccount {
  crypto::KeyPair key;
  std::string endpoint;
};

// The one sanctioned place a chain identity may appear in overlay traffic:
// a trainer proving control of a chain account over their p2p id.
struct TrainerBinding {
  crypto::PublicKey chain_account;
  crypto::Signature chain_sig;
};

Bytes binding_signing_bytes(const crypto::PublicKey& p2p_id);
TrainerBinding make_binding(const crypto::KeyPair& chain_key,
                            const crypto::PublicKey& p2p_id);

enum class MsgKind { Unicast, Broadcast, Room };

std::string to_string(MsgKind k);

struct P2pMessage {
  MsgKind kind = MsgKind::Unicast;
  crypto::PublicKey sender;
  crypto::PublicKey recipient;  // Unicast only
  std::string topic;            // Room only
  Bytes payload;
  std::optional<TrainerBinding> binding;  // Broadcast only
  crypto::Signature sender_sig;

  Bytes signing_bytes() const;
};

struct Delivery {
  crypto::PublicKey recipient;
  P2pMessage message;
};

class P2pNetwork {
 public:
  using TrainerCheck = std::function<bool(const crypto::PublicKey&)>;

  P2pNetwork(Clock* clock, TrainerCheck is_trainer)
      : clock_(clock), is_trainer_(std::move(is_trainer)) {}

  std::string register_peer(P2pAccount& account);
  std::optional<std::string> find_peer(const crypto::PublicKey& p2p_id) const;

  bool send_unicast(const P2pAccount& from, const crypto::PublicKey& to, Bytes payload);
  std::optional<std::size_t> send_broadcast(const P2pAccount& from, Bytes payload,
                                            const TrainerBinding& binding);
  bool join_room(const P2pAccount& peer, const std::string& topic);
  bool leave_room(const P2pAccount& peer, const std::string& topic);
  std::optional<std::size_t> post_room(const P2pAccount& from, const std::string& topic,
                                       Bytes payload);

  // raw entry point, used by sends above and by adversarial tests;
  // returns count of inboxes reached, nullopt when rejected outright
  std::optional<std::size_t> route(const P2pMessage& msg);

  std::vector<P2pMessage> drain_inbox(const crypto::PublicKey& p2p_id);
  std::size_t inbox_size(const crypto::PublicKey& p2p_id) const;

  const std::vector<std::string>& trace() const { return trace_; }
  const std::vector<Delivery>& delivered_log() const { return delivered_; }

 private:
  P2pMessage signed_message(const P2pAccount& from, P2pMessage msg) const;
  void deliver(const crypto::PublicKey& to, const P2pMessage& msg);

  Clock* clock_;
  TrainerCheck is_trainer_;
  std::map<crypto::PublicKey, std::string> endpoints_;
  std::vector<crypto::PublicKey> order_;  // registration order, for broadcast fan-out
  std::map<crypto::PublicKey, std::deque<P2pMessage>> inboxes_;
  std::map<std::string, std::set<crypto::PublicKey>> rooms_;
  std::vector<std::string> trace_;
  std::vector<Delivery> delivered_;
};

}  // namespace agora
