//! Latest-value publish/subscribe cache connecting sensors to consumers.

use crate::acoustics::Bearing;
use crate::power::RailState;
use crate::sensors::{DepthReading, DvlReading, ImuReading};
use crate::vision::Detection;

use super::MissionError;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Imu(ImuReading),
    Depth(DepthReading),
    Dvl(DvlReading),
    /// One processed frame; `None` when nothing matched.
    Vision(Option<Detection>),
    Heading(Bearing),
    Power(RailState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BusMessage {
    pub topic: String,
    pub timestamp: f64,
    pub payload: Payload,
}

/// Topics published by the simulation loop.
pub mod topic {
    pub const IMU: &str = "imu";
    pub const DEPTH: &str = "depth";
    pub const DVL: &str = "dvl";
    pub const FRONT_CAMERA: &str = "vision/front";
    pub const BOTTOM_CAMERA: &str = "vision/bottom";
    pub const HEADING: &str = "acoustics/heading";
    pub const POWER: &str = "power";

    pub const ALL: [&str; 7] = [IMU, DEPTH, DVL, FRONT_CAMERA, BOTTOM_CAMERA, HEADING, POWER];
}

/// Depth-one cache per registered topic.
#[derive(Debug, Clone, Default)]
pub struct Bus {
    slots: Vec<(String, Option<BusMessage>)>,
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    /// A bus with every topic in [`topic::ALL`] registered.
    pub fn standard() -> Self {
        let mut bus = Self::new();
        for t in topic::ALL {
            bus.register(t);
        }
        bus
    }

    /// Registering twice is a no-op.
    pub fn register(&mut self, topic: &str) {
        if !self.slots.iter().any(|(t, _)| t == topic) {
            self.slots.push((topic.to_string(), None));
        }
    }

    fn slot(&self, topic: &str) -> Result<usize, MissionError> {
        self.slots
            .iter()
            .position(|(t, _)| t == topic)
            .ok_or_else(|| MissionError::Bus(format!("unknown topic `{topic}`")))
    }

    pub fn publish(&mut self, topic: &str, timestamp: f64, payload: Payload) -> Result<(), MissionError> {
        let i = self.slot(topic)?;
        if let Some(prev) = &self.slots[i].1 {
            if timestamp < prev.timestamp {
                return Err(MissionError::Bus(format!(
                    "timestamp {timestamp} on `{topic}` precedes {}",
                    prev.timestamp
                )));
            }
        }
        self.slots[i].1 = Some(BusMessage {
            topic: topic.to_string(),
            timestamp,
            payload,
        });
        Ok(())
    }

    /// `Ok(None)` before the first publish.
    pub fn latest(&self, topic: &str) -> Result<Option<&BusMessage>, MissionError> {
        let i = self.slot(topic)?;
        Ok(self.slots[i].1.as_ref())
    }

    /// Latest message on `topic` no older than `max_age` at time `now`.
    pub fn fresh(&self, topic: &str, now: f64, max_age: f64) -> Option<&BusMessage> {
        self.latest(topic)
            .ok()
            .flatten()
            .filter(|m| now - m.timestamp <= max_age + 1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn depth(d: f64, t: f64) -> Payload {
        Payload::Depth(DepthReading { depth: d, timestamp: t })
    }

    #[test]
    fn publish_then_latest() {
        let mut bus = Bus::standard();
        bus.publish(topic::DEPTH, 1.0, depth(2.0, 1.0)).unwrap();
        let m = bus.latest(topic::DEPTH).unwrap().unwrap();
        assert_eq!(m.payload, depth(2.0, 1.0));
        assert_eq!(m.timestamp, 1.0);
    }

    #[test]
    fn empty_before_publish() {
        let bus = Bus::standard();
        assert!(bus.latest(topic::IMU).unwrap().is_none());
    }

    #[test]
    fn second_publish_wins() {
        let mut bus = Bus::standard();
        bus.publish(topic::DEPTH, 1.0, depth(2.0, 1.0)).unwrap();
        bus.publish(topic::DEPTH, 1.0, depth(3.0, 1.0)).unwrap();
        assert_eq!(bus.latest(topic::DEPTH).unwrap().unwrap().payload, depth(3.0, 1.0));
    }

    #[test]
    fn unknown_topic_is_an_error() {
        let mut bus = Bus::standard();
        assert!(matches!(bus.latest("sonar"), Err(MissionError::Bus(_))));
        assert!(bus.publish("sonar", 0.0, depth(0.0, 0.0)).is_err());
    }

    #[test]
    fn freshness_window() {
        let mut bus = Bus::standard();
        bus.publish(topic::DEPTH, 1.0, depth(2.0, 1.0)).unwrap();
        assert!(bus.fresh(topic::DEPTH, 1.5, 0.5).is_some());
        assert!(bus.fresh(topic::DEPTH, 1.6, 0.5).is_none());
    }

    proptest! {
        #[test]
        fn timestamps_never_go_backwards(ts in prop::collection::vec(0.0f64..100.0, 1..40)) {
            let mut bus = Bus::standard();
            let mut last = f64::NEG_INFINITY;
            for t in ts {
                let ok = bus.publish(topic::DEPTH, t, depth(0.0, t)).is_ok();
                prop_assert_eq!(ok, t >= last);
                if ok {
                    last = t;
                }
                let stored = bus.latest(topic::DEPTH).unwrap().unwrap().timestamp;
                prop_assert_eq!(stored, last);
            }
        }
    }
}
