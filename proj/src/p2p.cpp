#include "agora/p2p.hpp"

namespace agora {

Bytes binding_signing_bytes(const crypto::PublicKey& p2p_id) {
  Encoder e;
  e.str("agora.binding.v1");
  e.raw(p2p_id.bytes.data(), p2p_id.bytes.size());
  return e.out;
}

TrainerBinding make_binding(const crypto::KeyPair& chain_key,
                            const crypto::PublicKey& p2p_id) {
  TrainerBinding b;
  b.chain_account = chain_key.pub;
  b.chain_sig = crypto::sign(chain_key.sec, binding_signing_bytes(p2p_id));
  return b;
}

std::string to_string(MsgKind k) {
  switch (k) {
    case MsgKind::Unicast: return "unicast";
    case MsgKind::Broadcast: return "broadcast";
    case MsgKind::Room: return "room";
  }
  return "?";
}

Bytes P2pMessage::signing_bytes() const {
  Encoder e;
  e.str("agora.p2pmsg.v1");
  e.u8(static_cast<std::uint8_t>(kind));
  e.raw(sender.bytes.data(), sender.bytes.size());
  e.raw(recipient.bytes.data(), recipient.bytes.size());
  e.str(topic);
  e.blob(payload);
  e.u8(binding ? 1 : 0);
  if (binding) {
    e.raw(binding->chain_account.bytes.data(), binding->chain_account.bytes.size());
    e.raw(binding->chain_sig.bytes.data(), binding->chain_sig.bytes.size());
  }
  return e.out;
}

std::string P2pNetwork::register_peer(P2pAccount& account) {
  auto it = endpoints_.find(account.key.pub);
  if (it != endpoints_.end()) {
    account.endpoint = it->second;
    return it->second;
  }
  std::string endpoint = "node-" + std::to_string(order_.size());
  endpoints_[account.key.pub] = endpoint;
  order_.push_back(account.key.pub);
  inboxes_[account.key.pub];
  account.endpoint = endpoint;
  return endpoint;
}

std::optional<std::string> P2pNetwork::find_peer(const crypto::PublicKey& p2p_id) const {
  auto it = endpoints_.find(p2p_id);
  if (it == endpoints_.end()) return std::nullopt;
  return it->second;
}

P2pMessage P2pNetwork::signed_message(const P2pAccount& from, P2pMessage msg) const {
  msg.sender = from.key.pub;
  msg.sender_sig = crypto::sign(from.key.sec, msg.signing_bytes());
  return msg;
}

void P2pNetwork::deliver(const crypto::PublicKey& to, const P2pMessage& msg) {
  inboxes_[to].push_back(msg);
  trace_.push_back(std::to_string(clock_ ? clock_->now() : 0) + " " + to_string(msg.kind) +
                   " " + msg.sender.hex() + " " + to.hex());
  delivered_.push_back(Delivery{to, msg});
}

std::optional<std::size_t> P2pNetwork::route(const P2pMessage& msg) {
  if (!endpoints_.count(msg.sender)) return std::nullopt;
  if (msg.sender_sig.signer != msg.sender ||
      !crypto::verify(msg.sender, msg.signing_bytes(), msg.sender_sig))
    return std::nullopt;
  if (clock_) clock_->advance();

  switch (msg.kind) {
    case MsgKind::Unicast: {
      if (!endpoints_.count(msg.recipient)) return std::nullopt;
      deliver(msg.recipient, msg);
      return 1;
    }
    case MsgKind::Broadcast: {
      if (!msg.binding) return std::nullopt;
      if (!crypto::verify(msg.binding->chain_account, binding_signing_bytes(msg.sender),
                          msg.binding->chain_sig) ||
          msg.binding->chain_sig.signer != msg.binding->chain_account)
        return std::nullopt;
      if (!is_trainer_ || !is_trainer_(msg.binding->chain_account)) return std::nullopt;
      std::size_t count = 0;
      for (const auto& peer : order_) {
        if (peer == msg.sender) continue;
        deliver(peer, msg);
        ++count;
      }
      return count;
    }
    case MsgKind::Room: {
      auto it = rooms_.find(msg.topic);
      if (it == rooms_.end() || !it->second.count(msg.sender)) return std::nullopt;
      std::size_t count = 0;
      for (const auto& member : it->second) {
        if (member == msg.sender) continue;
        deliver(member, msg);
        ++count;
      }
      return count;
    }
  }
  return std::nullopt;
}

bool P2pNetwork::send_unicast(const P2pAccount& from, const crypto::PublicKey& to,
                              Bytes payload) {
  P2pMessage msg;
  msg.kind = MsgKind::Unicast;
  msg.recipient = to;
  msg.payload = std::move(payload);
  return route(signed_message(from, std::move(msg))).has_value();
}

std::optional<std::size_t> P2pNetwork::send_broadcast(const P2pAccount& from, Bytes payload,
                                                      const TrainerBinding& binding) {
  P2pMessage msg;
  msg.kind = MsgKind::Broadcast;
  msg.payload = std::move(payload);
  msg.binding = binding;
  return route(signed_message(from, std::move(msg)));
}

bool P2pNetwork::join_room(const P2pAccount& peer, const std::string& topic) {
  if (!endpoints_.count(peer.key.pub)) return false;
  rooms_[topic].insert(peer.key.pub);
  return true;
}

bool P2pNetwork::leave_room(const P2pAccount& peer, const std::string& topic) {
  auto it = rooms_.find(topic);
  if (it == rooms_.end()) return false;
  return it->second.erase(peer.key.pub) > 0;
}

std::optional<std::size_t> P2pNetwork::post_room(const P2pAccount& from,
                                                 const std::string& topic, Bytes payload) {
  P2pMessage msg;
  msg.kind = MsgKind::Room;
  msg.topic = topic;
  msg.payload = std::move(payload);
  return route(signed_message(from, std::move(msg)));
}

std::vector<P2pMessage> P2pNetwork::drain_inbox(const crypto::PublicKey& p2p_id) {
  auto it = inboxes_.find(p2p_id);
  if (it == inboxes_.end()) return {};
  std::vector<P2pMessage> out(it->second.begin(), it->second.end());
  it->second.clear();
  return out;
}

std::size_t P2pNetwork::inbox_size(const crypto::PublicKey& p2p_id) const {
  auto it = inboxes_.find(p2p_id);
  return it == inboxes_.end() ? 0 : it->second.size();
}

}  // namespace agora
