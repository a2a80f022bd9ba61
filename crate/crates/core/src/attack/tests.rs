use super::*;
use crate::dataset::erdos_renyi;
use crate::gnn::GnnConfig;
use alloc::vec;

const EXPLICIT: EquivalencyIndicator = EquivalencyIndicator::Explicit { gold: GoldClassifier::ComponentCount };

fn setup(threat: ThreatModel) -> AttackSetup {
    AttackSetup { indicator: EXPLICIT, budget: 2, threat, seed: 7 }
}

struct Fixture {
    model: GnnModel,
    graphs: Vec<Graph>,
    preds: Vec<usize>,
}

fn fixture() -> Fixture {
    let model = GnnModel::init(GnnConfig::s2v(2, 6, 3), 3).unwrap();
    let graphs: Vec<Graph> = (0..12).map(|s| erdos_renyi(8, 0.25, s).unwrap()).collect();
    let preds = graphs.iter().map(|g| model.predict(g, None).unwrap().class).collect();
    Fixture { model, graphs, preds }
}

fn instances<'a>(fx: &'a Fixture, labels: &[usize]) -> Vec<AttackInstance<'a>> {
    fx.graphs.iter().zip(labels).enumerate().map(|(id, (graph, &label))| AttackInstance { id, graph, target: None, label }).collect()
}

#[test]
fn identity_attacker_reports_clean_accuracy() {
    let fx = fixture();
    // half the labels agree with the model
    let labels: Vec<usize> = fx.preds.iter().enumerate().map(|(i, &p)| if i % 2 == 0 { p } else { (p + 1) % 3 }).collect();
    let (summary, outcomes) = evaluate_attack(&NoAttack, &instances(&fx, &labels), &fx.model, &setup(ThreatModel::PbaD)).unwrap();
    assert_eq!(summary.clean_accuracy, 0.5);
    assert_eq!(summary.attacked_accuracy, summary.clean_accuracy);
    assert!(outcomes.iter().all(|o| o.modifications.is_empty() && o.queries_used == 0));
    assert_eq!(outcomes.iter().filter(|o| o.attacked).count(), 6);
}

#[test]
fn misclassified_instances_count_as_lost() {
    let fx = fixture();
    let labels: Vec<usize> = fx.preds.iter().map(|&p| (p + 2) % 3).collect();
    let (summary, outcomes) = evaluate_attack(&NoAttack, &instances(&fx, &labels), &fx.model, &setup(ThreatModel::Wba)).unwrap();
    assert_eq!(summary.attacked_accuracy, 0.0);
    assert!(outcomes.iter().all(|o| !o.attacked && o.success));
}

struct Greedy;

impl Attacker for Greedy {
    fn name(&self) -> &str {
        "grad-probe"
    }

    fn attack(&self, inst: &AttackInstance<'_>, _: &Constraint, model: &ModelHandle<'_>, _: u64) -> Result<Graph> {
        model.alpha_gradients(inst.graph, inst.target, inst.label, None)?;
        Ok(inst.graph.clone())
    }
}

struct Cheater;

impl Attacker for Cheater {
    fn name(&self) -> &str {
        "cheater"
    }

    fn attack(&self, inst: &AttackInstance<'_>, _: &Constraint, _: &ModelHandle<'_>, _: u64) -> Result<Graph> {
        // isolate node 0: changes the component count unless it already was isolated
        let g = inst.graph.retain_edges(|e| !e.touches(0));
        Ok(if g == *inst.graph { g.toggled(&[Edge::new(0, 1).unwrap()]) } else { g })
    }
}

struct Counter(u64);

impl Attacker for Counter {
    fn name(&self) -> &str {
        "counter"
    }

    fn attack(&self, inst: &AttackInstance<'_>, _: &Constraint, model: &ModelHandle<'_>, _: u64) -> Result<Graph> {
        for _ in 0..self.0 {
            model.label(inst.graph, inst.target)?;
        }
        Ok(inst.graph.clone())
    }
}

#[test]
fn capability_violations_propagate() {
    let fx = fixture();
    let insts = instances(&fx, &fx.preds);
    let err = evaluate_attack(&Greedy, &insts, &fx.model, &setup(ThreatModel::PbaC)).unwrap_err();
    assert!(matches!(err, Error::ThreatModelViolation(_)));
    assert!(evaluate_attack(&Greedy, &insts, &fx.model, &setup(ThreatModel::Wba)).is_ok());
}

#[test]
fn inadmissible_results_are_rejected() {
    let fx = fixture();
    let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
    let label = fx.model.predict(&star, None).unwrap().class;
    let inst = AttackInstance { id: 0, graph: &star, target: None, label };
    assert!(matches!(attack_one(&Cheater, &inst, &fx.model, &setup(ThreatModel::PbaD)), Err(Error::ConstraintViolation(_))));
}

#[test]
fn queries_are_counted_exactly() {
    let fx = fixture();
    let insts = instances(&fx, &fx.preds);
    let (summary, outcomes) = evaluate_attack(&Counter(5), &insts, &fx.model, &setup(ThreatModel::PbaD)).unwrap();
    assert!(outcomes.iter().all(|o| o.queries_used == 5));
    assert_eq!(summary.total_queries, 60);
    assert!(matches!(evaluate_attack(&Counter(1), &insts, &fx.model, &setup(ThreatModel::Rba)), Err(Error::ThreatModelViolation(_))));
    let (rba, _) = evaluate_attack(&Counter(0), &insts, &fx.model, &setup(ThreatModel::Rba)).unwrap();
    assert_eq!(rba.total_queries, 0);
}

#[test]
fn outcome_verification_catches_tampering() {
    let fx = fixture();
    let insts = instances(&fx, &fx.preds);
    let s = setup(ThreatModel::PbaD);
    let mut outcome = attack_one(&NoAttack, &insts[0], &fx.model, &s).unwrap();
    verify_outcome(&outcome, &fx.graphs[0], &s).unwrap();
    let extra: Vec<Edge> = (1..4).map(|v| Edge::new(0, v).unwrap()).collect();
    outcome.modifications = Modification::between(&fx.graphs[0], &fx.graphs[0].toggled(&extra));
    assert!(verify_outcome(&outcome, &fx.graphs[0], &s).is_err());
}

#[test]
fn modifications_record_kind() {
    let g = Graph::from_edges(3, [(0, 1)]).unwrap();
    let h = g.toggled(&[Edge::new(0, 1).unwrap(), Edge::new(1, 2).unwrap()]);
    assert_eq!(
        Modification::between(&g, &h),
        vec![
            Modification { kind: ModKind::Delete, edge: Edge::new(0, 1).unwrap() },
            Modification { kind: ModKind::Add, edge: Edge::new(1, 2).unwrap() },
        ]
    );
}
