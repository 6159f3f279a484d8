use super::{Action, ComponentState};
use crate::protocol::{Message, MessageType};
use crate::tom::TimeoutKind;
use crate::NodeId;

impl ComponentState {
    pub(super) fn manager_handle(&mut self, m: &Message, out: &mut Vec<Action>) {
        let subject = self.valid_node(m);
        match m.ty {
            MessageType::INJECT_FAULT_TIMEOUT => {
                self.tom.close();
                out.push(Action::CloseTom);
            }
            MessageType::IA_FLAG_TIMEOUT => out.push(Action::ClearIaFlag),
            MessageType::MIA_TIMEOUT => {
                let Some(s) = subject else {
                    return self.unhandled(m, out);
                };
                let mia = Message::new(MessageType::MIA, s).with_arg(0, self.me as i32);
                self.send(out, s, mia);
                self.renew(out, TimeoutKind::Mia, s);
            }
            MessageType::DB if subject == Some(self.me) => {
                for i in self.peers().collect::<Vec<_>>() {
                    self.renew(out, TimeoutKind::Mia, i);
                }
                self.apply_db(m, out);
                self.broadcast_db(m, out);
            }
            MessageType::DB => {
                self.apply_db(m, out);
                match subject {
                    Some(s) => self.manager_taia(s, out),
                    None => self.unhandled(m, out),
                }
            }
            MessageType::TAIA => match subject {
                Some(s) => self.manager_taia(s, out),
                None => self.unhandled(m, out),
            },
            MessageType::TAIA_TIMEOUT => {
                let Some(s) = subject else {
                    return self.unhandled(m, out);
                };
                self.suspicion[s] = true;
                self.arm_teif(out, TimeoutKind::Teif, s);
                self.delete(out, TimeoutKind::Taia, s);
            }
            MessageType::TEIF => match subject {
                Some(s) if self.suspicion[s] => {
                    self.delete(out, TimeoutKind::Teif, s);
                    self.suspicion[s] = false;
                    out.push(Action::RequestAgentRespawn { target: s });
                }
                Some(s) if s == self.me => self.rouse_iat(out),
                Some(s) => {
                    self.send(out, s, Message::new(MessageType::ENIA, self.me));
                }
                None => self.unhandled(m, out),
            },
            MessageType::TEIF_TIMEOUT => {
                if let Some(s) = subject.filter(|&s| self.suspicion[s]) {
                    self.delete(out, TimeoutKind::Taia, s);
                    self.suspicion[s] = false;
                    out.push(Action::RequestNodeReboot { target: s });
                }
            }
            MessageType::ENIA => self.rouse_iat(out),
            MessageType::WITM => match subject {
                Some(s) => {
                    let nmi = Message::new(MessageType::NMI, self.me).with_arg(0, self.me as i32);
                    self.send(out, s, nmi);
                }
                None => self.unhandled(m, out),
            },
            MessageType::NIUA => {
                if let Some(s) = subject.filter(|&s| s != self.me) {
                    if !self.tom.is_present(TimeoutKind::Taia, s) {
                        self.insert(out, TimeoutKind::Taia, s);
                    }
                }
            }
            MessageType::REQUEST_DB => self.reply_db(m, out),
            _ => self.unhandled(m, out),
        }
    }

    /// TAIA from `s`, explicit or piggybacked on a remote DB update.
    fn manager_taia(&mut self, s: NodeId, out: &mut Vec<Action>) {
        if s == self.me {
            return;
        }
        if !self.tom.is_present(TimeoutKind::Taia, s) {
            self.insert(out, TimeoutKind::Taia, s);
            let niua = Message::new(MessageType::NIUA, s);
            for i in (0..self.n_nodes).filter(|&i| i != self.me && i != s) {
                self.send(out, i, niua);
            }
        }
        if self.suspicion[s] {
            self.suspicion[s] = false;
        } else {
            self.renew(out, TimeoutKind::Taia, s);
        }
    }
}
