use afeis_core::interpreter::ConcreteCommand;
use afeis_core::robot::Robot;
use proptest::prelude::*;

fn command() -> impl Strategy<Value = ConcreteCommand> {
    let amount = 0.0f64..20.0;
    prop_oneof![
        (prop::sample::select(vec!["FORWARD", "UP", "DOWN", "LEFT", "RIGHT", "WAIT", "FOLLOW"]), amount)
            .prop_map(|(n, a)| ConcreteCommand::new(n, &[a])),
        prop::sample::select(vec!["SNAPSHOT", "SURFACE", "BACK", "CIRCLE"]).prop_map(|n| ConcreteCommand::new(n, &[])),
        Just(ConcreteCommand::new("FLY", &[1.0])),
        Just(ConcreteCommand::new("UP", &[-1.0])),
    ]
}

fn valid_list() -> impl Strategy<Value = Vec<ConcreteCommand>> {
    prop::collection::vec(command(), 0..20).prop_map(|l| {
        let r = Robot::default();
        l.into_iter().filter(|c| r.validate(c).is_ok()).collect()
    })
}

fn run(lists: &[&[ConcreteCommand]]) -> Robot {
    let mut r = Robot::default();
    for l in lists {
        r.deliver(l).unwrap();
    }
    r.execute().unwrap();
    r
}

proptest! {
    #[test]
    fn delivery_never_moves(lists in prop::collection::vec(prop::collection::vec(command(), 0..10), 0..6), setup in valid_list()) {
        let mut r = run(&[&setup]);
        let before = r.state().clone();
        for l in &lists {
            let buffered = r.state().buffer.len();
            match r.deliver(l) {
                Ok(()) => prop_assert_eq!(r.state().buffer.len(), buffered + l.len()),
                Err(_) => prop_assert_eq!(r.state().buffer.len(), buffered),
            }
            prop_assert_eq!(r.pose().x.to_bits(), before.pose.x.to_bits());
            prop_assert_eq!(r.pose().y.to_bits(), before.pose.y.to_bits());
            prop_assert_eq!(r.pose().depth.to_bits(), before.pose.depth.to_bits());
            prop_assert_eq!(r.pose().heading.to_bits(), before.pose.heading.to_bits());
            prop_assert_eq!(&r.state().snapshots, &before.snapshots);
        }
    }

    #[test]
    fn delivery_composes(a in valid_list(), b in valid_list()) {
        let joined: Vec<_> = a.iter().chain(&b).cloned().collect();
        prop_assert_eq!(run(&[&a, &b]).state().clone(), run(&[&joined]).state().clone());
    }

    #[test]
    fn down_then_up_restores_depth(setup in valid_list(), m in 0.0f64..50.0) {
        let mut r = run(&[&setup]);
        let depth = r.pose().depth;
        r.deliver(&[ConcreteCommand::new("DOWN", &[m]), ConcreteCommand::new("UP", &[m])]).unwrap();
        r.execute().unwrap();
        prop_assert!((r.pose().depth - depth).abs() < 1e-9);
    }

    #[test]
    fn left_then_right_restores_heading(setup in valid_list(), a in -720.0f64..720.0) {
        let mut r = run(&[&setup]);
        let before = r.pose();
        r.deliver(&[ConcreteCommand::new("LEFT", &[a]), ConcreteCommand::new("RIGHT", &[a])]).unwrap();
        r.execute().unwrap();
        prop_assert!(r.pose().approx_eq(&before, 1e-9));
    }

    #[test]
    fn one_snapshot_per_command(list in valid_list()) {
        let r = run(&[&list]);
        let n = list.iter().filter(|c| c.name == "SNAPSHOT").count();
        // the default robot has no FOLLOW interval, so only SNAPSHOT adds any
        prop_assert_eq!(r.state().snapshots.len(), n);
        prop_assert!(r.state().snapshots.iter().enumerate().all(|(i, s)| s.seq == i as u32 + 1));
    }
}
