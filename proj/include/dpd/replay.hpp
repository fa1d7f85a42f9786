#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dpd/rng.hpp"

namespace dpd {

struct Transition {
    Eigen::VectorXd state;
    Eigen::VectorXd action;
    double reward = 0.0;
    Eigen::VectorXd next_state;
    bool done = false;       // true terminal; bootstrapping masks on this
    bool truncated = false;  // time-limit end; bootstrapping still applies
    uint64_t insert_index = 0;
};

// Ring storage preserving recency order. insert_index increases strictly with
// every push and survives wrap-around, so recent-window queries stay exact.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
        storage_.reserve(capacity);
    }

    void push(Transition t) {
        t.insert_index = next_index_++;
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    size_t size() const { return storage_.size(); }
    size_t capacity() const { return capacity_; }
    uint64_t total_pushed() const { return next_index_; }

    // i-th newest transition, i = 0 the most recent
    const Transition& newest(size_t i) const {
        if (i >= storage_.size()) throw std::out_of_range("ReplayBuffer::newest");
        const size_t pos = (head_ + storage_.size() - 1 - i) % storage_.size();
        return storage_[pos];
    }

    // the k newest transitions (all of them when k >= size), newest first
    std::vector<const Transition*> recent_window(size_t k) const {
        const size_t n = std::min(k, storage_.size());
        std::vector<const Transition*> out;
        out.reserve(n);
        for (size_t i = 0; i < n; ++i) out.push_back(&newest(i));
        return out;
    }

    // uniform sample with replacement over the whole buffer
    std::vector<const Transition*> sample(size_t n, Rng& rng) const {
        if (storage_.empty()) throw std::logic_error("ReplayBuffer::sample: empty buffer");
        std::vector<const Transition*> out;
        out.reserve(n);
        for (size_t i = 0; i < n; ++i) out.push_back(&storage_[rng.integer(storage_.size())]);
        return out;
    }

private:
    size_t capacity_;
    std::vector<Transition> storage_;
    size_t head_ = 0;  // slot that the next overwrite takes (oldest element)
    uint64_t next_index_ = 0;
};

}  // namespace dpd
