#![no_main]

use libfuzzer_sys::fuzz_target;
use wormbot::scenario::output::trajectory_csv;
use wormbot::scenario::parse_trajectory_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(traj) = parse_trajectory_csv(text) {
        let rendered = trajectory_csv(&traj, 1).expect("parsed trajectories are non-empty");
        let again = parse_trajectory_csv(&rendered).expect("rendered trajectory parses");
        assert_eq!(traj, again);
    }
});
