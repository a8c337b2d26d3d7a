#include "eovsim/nodes.hpp"

#include <stdexcept>

namespace eovsim {

namespace {

enum TimerTag : std::uint32_t {
    kSubmit = 1,
    kEndorseTimeout = 2,
    kBroadcastTimeout = 3,
    kCutTimeout = 4,
};

Message make(MessageKind kind, std::uint32_t size, MessageBody body)
{
    Message m;
    m.kind = kind;
    m.size_bytes = size;
    m.body = std::move(body);
    return m;
}

std::uint32_t block_size(const MessageSizes& s, const Block& b)
{
    return s.block_header + static_cast<std::uint32_t>(b.payload_bytes);
}

} // namespace

std::uint32_t proposal_size(const MessageSizes& s, const Proposal&)
{
    return s.proposal + s.identity_stamp;
}

std::uint32_t endorsement_size(const MessageSizes& s, const Endorsement& e)
{
    return s.endorsement_header + s.identity_stamp +
           s.read_entry * static_cast<std::uint32_t>(e.reads.size()) +
           s.write_entry * static_cast<std::uint32_t>(e.writes.size());
}

std::uint32_t envelope_size(const MessageSizes& s, const ReadSet& reads, const WriteSet& writes,
    std::size_t n_endorsements)
{
    return s.envelope_header + s.proposal + s.read_entry * static_cast<std::uint32_t>(reads.size()) +
           s.write_entry * static_cast<std::uint32_t>(writes.size()) +
           s.identity_stamp * static_cast<std::uint32_t>(n_endorsements);
}

// ---------------------------------------------------------------- client

ClientNode::ClientNode(Engine& engine, NodeId id, const Directory& dir, std::uint32_t index,
    ClientConfig config, std::vector<Proposal> workload)
    : Node(engine, id), dir_(dir), index_(index), config_(config), workload_(std::move(workload)),
      planned_(planned_submissions(config.rate_tps, config.duration))
{
    config_.validate();
    if (workload_.size() < planned_)
        throw std::invalid_argument("client workload shorter than the planned submissions");
    slots_.resize(planned_);
    journeys_.resize(planned_);
    for (std::uint64_t i = 0; i < planned_; ++i)
    {
        TxnJourney& j = journeys_[i];
        j.txn_id = workload_[i].txn_id;
        j.client = index_;
        j.op = workload_[i].op.variant;
        j.submit_time = submission_time(config_.rate_tps, i);
    }
}

NodeId ClientNode::home_peer() const
{
    return dir_.endorsing_peers[index_ % dir_.endorsing_peers.size()];
}

void ClientNode::start()
{
    if (planned_ > 0)
        set_timer(kSubmit, 0, journeys_[0].submit_time - engine().now());
}

void ClientNode::set_timer(std::uint32_t tag, std::uint64_t arg, Duration delay)
{
    engine().schedule(id(), make(MessageKind::TimerFire, 0, TimerBody{tag, arg}), delay);
}

void ClientNode::on_message(const Message& msg)
{
    switch (msg.kind)
    {
    case MessageKind::TimerFire: {
        const auto& t = std::get<TimerBody>(msg.body);
        Slot& slot = slots_.at(t.arg);
        if (t.tag == kSubmit)
        {
            submit(t.arg);
            if (t.arg + 1 < planned_)
                set_timer(kSubmit, t.arg + 1, journeys_[t.arg + 1].submit_time - engine().now());
        }
        else if (t.tag == kEndorseTimeout && slot.phase == Phase::Endorsing)
        {
            finish(t.arg, JourneyStatus::DroppedEndorsement);
        }
        else if (t.tag == kBroadcastTimeout && slot.phase == Phase::Broadcasting)
        {
            finish(t.arg, JourneyStatus::DroppedBroadcast);
        }
        break;
    }
    case MessageKind::Endorsement: on_endorsement(std::get<EndorsementBody>(msg.body)); break;
    case MessageKind::BroadcastReply: {
        const auto seq = std::get<BroadcastReplyBody>(msg.body).seq;
        Slot& slot = slots_.at(seq);
        if (slot.phase == Phase::Broadcasting)
        {
            journeys_[seq].broadcast_ack_time = engine().now();
            slot.phase = Phase::AwaitingCommit;
        }
        break;
    }
    case MessageKind::CommitNotice: {
        for (const CommitEntry& e : std::get<CommitNoticeBody>(msg.body).entries)
        {
            Slot& slot = slots_.at(e.seq);
            if (slot.phase != Phase::Broadcasting && slot.phase != Phase::AwaitingCommit)
            {
                if (slot.phase == Phase::Done)
                    ++late_commits_;
                continue;
            }
            journeys_[e.seq].commit_time = engine().now();
            finish(e.seq, e.flag == TxnFlag::Valid ? JourneyStatus::Committed
                                                   : JourneyStatus::InvalidCommitted);
        }
        break;
    }
    default: throw std::logic_error("client: unexpected " + std::string(to_string(msg.kind)));
    }
}

void ClientNode::submit(std::uint64_t seq)
{
    auto proposal = std::make_shared<Proposal>(workload_[seq]);
    proposal->submitted_at = engine().now();
    Slot& slot = slots_[seq];
    slot.proposal = proposal;
    slot.collector.emplace(dir_.policy, static_cast<std::uint32_t>(dir_.endorsing_peers.size()));
    slot.phase = Phase::Endorsing;

    const std::uint32_t size = proposal_size(dir_.sizes, *proposal);
    for (NodeId peer : dir_.endorsing_peers)
        engine().send(id(), peer, make(MessageKind::Proposal, size, ProposalBody{proposal}));
    set_timer(kEndorseTimeout, seq, config_.endorse_timeout);
}

void ClientNode::on_endorsement(const EndorsementBody& body)
{
    Slot& slot = slots_.at(body.seq);
    if (slot.phase != Phase::Endorsing)
        return;
    const auto state = body.endorsement
                           ? slot.collector->add(body.endorsement)
                           : slot.collector->add_refusal(Identity{NodeClass::Peer, body.peer});
    if (state == EndorsementCollector::State::Satisfied)
    {
        journeys_[body.seq].endorsed_time = engine().now();
        broadcast(body.seq);
    }
    else if (state == EndorsementCollector::State::Failed)
    {
        finish(body.seq, JourneyStatus::DroppedEndorsement);
    }
}

void ClientNode::broadcast(std::uint64_t seq)
{
    Slot& slot = slots_[seq];
    auto env = std::make_shared<Envelope>();
    env->txn_id = slot.proposal->txn_id;
    env->proposal = slot.proposal;
    env->endorsements = slot.collector->witness();
    env->client = index_;
    env->broadcast_at = engine().now();
    env->size_bytes =
        envelope_size(dir_.sizes, env->reads(), env->writes(), env->endorsements.size());
    slot.collector.reset();
    slot.phase = Phase::Broadcasting;

    const NodeId orderer = dir_.orderers[(index_ + seq) % dir_.orderers.size()];
    const std::uint32_t size = env->size_bytes;
    engine().send(id(), orderer, make(MessageKind::Envelope, size, EnvelopeBody{std::move(env)}));
    set_timer(kBroadcastTimeout, seq, config_.broadcast_timeout);
}

void ClientNode::finish(std::uint64_t seq, JourneyStatus status)
{
    Slot& slot = slots_[seq];
    slot.phase = Phase::Done;
    slot.collector.reset();
    slot.proposal.reset();
    journeys_[seq].status = status;
}

// ------------------------------------------------------------------ peer

PeerNode::PeerNode(Engine& engine, NodeId id, const Directory& dir, std::uint32_t index,
    bool endorsing, std::vector<bool> authorized_clients, BlockRef genesis,
    std::uint32_t gossip_fanout)
    : Node(engine, id), dir_(dir), index_(index), endorsing_(endorsing), cpu_(engine, id),
      buffer_(1)
{
    if (!genesis || genesis->height != 0)
        throw std::invalid_argument("peer needs a height-0 genesis block");
    ledger_.append_block(genesis, std::vector<TxnFlag>(genesis->txns.size(), TxnFlag::Valid));
    for (std::uint32_t i = 0; i < genesis->txns.size(); ++i)
        state_.apply_write_set(genesis->txns[i]->writes(), Version{0, i});
    state_history_.push_back(state_.digest());

    if (endorsing_)
    {
        endorser_.emplace(Identity{NodeClass::Peer, index_}, std::move(authorized_clients));
        const auto n_endorsing = static_cast<std::uint32_t>(dir_.endorsing_peers.size());
        home_client_.resize(dir_.clients.size());
        for (std::size_t c = 0; c < dir_.clients.size(); ++c)
            home_client_[c] = c % n_endorsing == index_;
        for (std::uint32_t j : gossip_targets(index_, n_endorsing,
                 static_cast<std::uint32_t>(dir_.non_endorsing_peers.size()), gossip_fanout))
            gossip_targets_.push_back(dir_.non_endorsing_peers[j]);
    }
}

void PeerNode::on_message(const Message& msg)
{
    switch (msg.kind)
    {
    case MessageKind::TimerFire: cpu_.on_complete(); break;
    case MessageKind::Proposal: {
        if (!endorser_)
            throw std::logic_error("non-endorsing peer received a proposal");
        auto proposal = std::get<ProposalBody>(msg.body).proposal;
        const NodeId client = msg.src;
        cpu_.submit(dir_.service.endorse, [this, proposal, client] {
            auto e = endorser_->endorse(*proposal, state_, engine().now());
            EndorsementBody body{proposal->seq, index_, nullptr};
            std::uint32_t size = dir_.sizes.endorsement_header + dir_.sizes.identity_stamp;
            if (e)
            {
                size = endorsement_size(dir_.sizes, *e);
                body.endorsement = std::make_shared<const Endorsement>(std::move(*e));
            }
            else
            {
                ++refusals_;
            }
            engine().send(id(), client, make(MessageKind::Endorsement, size, std::move(body)));
        });
        break;
    }
    case MessageKind::BlockDeliver:
    case MessageKind::GossipBlock: on_block(std::get<BlockBody>(msg.body).block); break;
    default: throw std::logic_error("peer: unexpected " + std::string(to_string(msg.kind)));
    }
}

Duration PeerNode::validation_cost(const Block& block) const
{
    Duration cost{0};
    for (const auto& env : block.txns)
        cost += dir_.service.validate_per_txn +
                dir_.service.verify_per_endorsement * static_cast<long>(env->endorsements.size());
    return cost;
}

void PeerNode::on_block(const BlockRef& block)
{
    for (BlockRef& ready : buffer_.offer(block))
    {
        const Duration cost = validation_cost(*ready);
        cpu_.submit(cost, [this, b = std::move(ready)] { commit(b); });
    }
}

void PeerNode::commit(const BlockRef& block)
{
    const auto results = validate_block(*block, dir_.policy, state_);
    const CommitOutcome outcome = commit_block(block, results, ledger_, state_);
    state_history_.push_back(outcome.state_digest);
    flags_ += outcome.counts;

    if (!endorsing_)
        return;

    std::vector<std::vector<CommitEntry>> notices(dir_.clients.size());
    for (std::size_t i = 0; i < block->txns.size(); ++i)
    {
        const Envelope& env = *block->txns[i];
        if (env.proposal && env.client < home_client_.size() && home_client_[env.client])
            notices[env.client].push_back(CommitEntry{env.proposal->seq, results[i].flag});
    }
    for (std::size_t c = 0; c < notices.size(); ++c)
    {
        if (notices[c].empty())
            continue;
        const auto size = dir_.sizes.block_header +
                          dir_.sizes.commit_entry * static_cast<std::uint32_t>(notices[c].size());
        engine().send(id(), dir_.clients[c],
            make(MessageKind::CommitNotice, size,
                CommitNoticeBody{outcome.height, std::move(notices[c])}));
    }

    const std::uint32_t size = block_size(dir_.sizes, *block);
    for (NodeId target : gossip_targets_)
        engine().send(id(), target, make(MessageKind::GossipBlock, size, BlockBody{block}));
}

// --------------------------------------------------------------- orderer

OrdererNode::OrdererNode(Engine& engine, NodeId id, const Directory& dir, std::uint32_t index,
    bool cuts_blocks, BlockCutterConfig cutter, std::uint32_t queue_capacity, Digest genesis_hash)
    : Node(engine, id), dir_(dir), index_(index), cuts_blocks_(cuts_blocks), cpu_(engine, id),
      admission_(queue_capacity), cutter_(cutter), tip_(genesis_hash)
{
}

void OrdererNode::on_message(const Message& msg)
{
    switch (msg.kind)
    {
    case MessageKind::Envelope: on_envelope(std::get<EnvelopeBody>(msg.body)); break;
    case MessageKind::LogDeliver: on_committed(std::get<LogRecordBody>(msg.body)); break;
    case MessageKind::TimerFire: {
        const auto& t = std::get<TimerBody>(msg.body);
        if (t.tag == ServiceQueue::kTimerTag)
        {
            cpu_.on_complete();
        }
        else if (t.tag == kCutTimeout && t.arg == timer_generation_)
        {
            armed_.reset();
            cut_ready();
            rearm();
        }
        break;
    }
    default: throw std::logic_error("orderer: unexpected " + std::string(to_string(msg.kind)));
    }
}

void OrdererNode::on_envelope(const EnvelopeBody& body)
{
    // A full input queue refuses silently; the client sees a broadcast timeout.
    if (admission_.offer() == BroadcastOutcome::Refused)
        return;
    LogRecordBody record{0, index_, body.envelope};
    const std::uint32_t size = dir_.sizes.log_header + body.envelope->size_bytes;
    cpu_.submit(dir_.service.orderer_forward, [this, record = std::move(record), size]() mutable {
        engine().send(id(), dir_.brokers.front(),
            make(MessageKind::LogAppend, size, std::move(record)));
    });
}

void OrdererNode::on_committed(const LogRecordBody& body)
{
    const Envelope& env = *body.envelope;
    if (body.origin_orderer == index_)
    {
        admission_.on_committed();
        engine().send(id(), dir_.clients.at(env.client),
            make(MessageKind::BroadcastReply, dir_.sizes.ack,
                BroadcastReplyBody{env.proposal->seq}));
    }
    if (!cuts_blocks_)
        return;
    cutter_.push(body.envelope, engine().now());
    cut_ready();
    rearm();
}

void OrdererNode::cut_ready()
{
    while (auto batch = cutter_.cut(engine().now()))
        deliver(make_block(std::move(*batch), next_height_, tip_, engine().now()));
}

void OrdererNode::rearm()
{
    const std::optional<SimTime> deadline = cutter_.deadline();
    if (deadline == armed_)
        return;
    armed_ = deadline;
    ++timer_generation_;
    if (deadline)
    {
        const Duration delay = std::max(Duration{0}, *deadline - engine().now());
        engine().schedule(id(),
            make(MessageKind::TimerFire, 0, TimerBody{kCutTimeout, timer_generation_}), delay);
    }
}

void OrdererNode::deliver(Block block)
{
    ++next_height_;
    tip_ = hash_block(block);
    auto ref = std::make_shared<const Block>(std::move(block));
    cut_blocks_.push_back(ref);
    const std::uint32_t size = block_size(dir_.sizes, *ref);
    for (NodeId peer : dir_.endorsing_peers)
        engine().send(id(), peer, make(MessageKind::BlockDeliver, size, BlockBody{ref}));
}

// ---------------------------------------------------------------- broker

BrokerNode::BrokerNode(Engine& engine, NodeId id, const Directory& dir, std::uint32_t index,
    ReplicationConfig replication)
    : Node(engine, id), dir_(dir), index_(index), cpu_(engine, id)
{
    if (leader())
        log_.emplace(replication);
}

void BrokerNode::on_message(const Message& msg)
{
    switch (msg.kind)
    {
    case MessageKind::TimerFire: cpu_.on_complete(); break;
    case MessageKind::LogAppend: {
        const auto& body = std::get<LogRecordBody>(msg.body);
        if (leader())
        {
            on_append(body);
            break;
        }
        // Follower: store the copy, then acknowledge to the leader.
        const std::uint64_t offset = body.offset;
        cpu_.submit(dir_.service.log_append, [this, offset] {
            ++held_;
            engine().send(id(), dir_.brokers.front(),
                make(MessageKind::LogAck, dir_.sizes.ack, LogAckBody{offset, index_}));
        });
        break;
    }
    case MessageKind::LogAck: {
        if (!leader())
            throw std::logic_error("follower received a log ack");
        const auto& ack = std::get<LogAckBody>(msg.body);
        publish(log_->acknowledge(ack.offset, ack.broker));
        break;
    }
    default: throw std::logic_error("broker: unexpected " + std::string(to_string(msg.kind)));
    }
}

void BrokerNode::on_append(const LogRecordBody& body)
{
    cpu_.submit(dir_.service.log_append, [this, body] {
        auto result = log_->append(body.envelope);
        const auto* appended = std::get_if<ReplicatedLog::Appended>(&result);
        if (!appended)
            return; // unavailable: the client's broadcast timer covers it
        ++held_;
        origin_.push_back(body.origin_orderer);
        const std::uint32_t size = dir_.sizes.log_header + body.envelope->size_bytes;
        for (std::uint32_t f : appended->followers)
            engine().send(id(), dir_.brokers.at(f),
                make(MessageKind::LogAppend, size,
                    LogRecordBody{appended->offset, body.origin_orderer, body.envelope}));
        publish(appended->committed);
    });
}

void BrokerNode::publish(const std::vector<std::uint64_t>& offsets)
{
    for (std::uint64_t offset : offsets)
    {
        const EnvelopeRef& env = log_->record(offset);
        const std::uint32_t size = dir_.sizes.log_header + env->size_bytes;
        for (NodeId orderer : dir_.orderers)
            engine().send(id(), orderer,
                make(MessageKind::LogDeliver, size, LogRecordBody{offset, origin_[offset], env}));
    }
}

} // namespace eovsim
